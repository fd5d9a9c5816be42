/* C interface to the oscillatory-network library. Every function returns an
 * ONN_* status code (0 on success); when `err` is non-null it receives the
 * code and a message. Handles are opaque and owned by the caller. */
#ifndef ONN_C_H
#define ONN_C_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
  ONN_OK = 0,
  ONN_INVALID_ARGUMENT = 1,
  ONN_INVARIANT_VIOLATED = 2,
  ONN_RAMP_TOO_SHALLOW = 3,
  ONN_SINGULAR_MATRIX = 4,
  ONN_STEP_REJECTED = 5,
  ONN_INSUFFICIENT_CROSSINGS = 6,
  ONN_UNSUPPORTED_SIZE = 7,
  ONN_LENGTH_MISMATCH = 8,
  ONN_BAD_MAGIC = 9,
  ONN_TRUNCATED_FILE = 10,
  ONN_COUNT_MISMATCH = 11,
  ONN_WRONG_SHAPE = 12,
  ONN_SHAPE_MISMATCH = 13,
  ONN_DIVERGENCE = 14,
  ONN_INSUFFICIENT_CALIBRATION = 15,
  ONN_IO = 16,
  ONN_CONFIG = 17,
  ONN_FORMAT = 18,
  ONN_INTERNAL = 99
};

typedef struct onn_error {
  int code;
  char message[512];
} onn_error;

typedef struct onn_config onn_config;
typedef struct onn_network onn_network;

const char* onn_version(void);
const char* onn_status_name(int code);

/* ---- run configuration and pipeline stages ---- */

int onn_config_load(const char* path, onn_config** out, onn_error* err);
void onn_config_free(onn_config* cfg);
/* Overrides one setting; the config hash changes accordingly. Keys:
 * conv.images, conv.labels, conv.k, conv.stride, conv.n_train, conv.n_test,
 * conv.fmap_dir, network.patterns_file, output_dir. */
int onn_config_set(onn_config* cfg, const char* key, const char* value, onn_error* err);
/* Copies the 16-hex-digit config hash into buf (cap >= 17). */
int onn_config_hash(const onn_config* cfg, char* buf, size_t cap);

/* stage: simulate, program, train, filter, hybrid, bench. out_dir may be NULL
 * (config output_dir). *skipped is set when --resume found valid outputs. The
 * one-line summary is copied into `summary` when non-null. */
int onn_run_stage(const onn_config* cfg, const char* stage, const char* out_dir, int resume, int* skipped,
                  char* summary, size_t summary_cap, onn_error* err);

/* Copies the bench report (format "table" or "json") into buf; *needed gets
 * the full length including the terminator. */
int onn_bench_report(const onn_config* cfg, const char* format, char* buf, size_t cap, size_t* needed, onn_error* err);

/* ---- networks ---- */

typedef struct onn_unit {
  double r_ins, r_met, v_high, v_low; /* device, Ohm and V */
  double c_node, g_load, v_in;        /* F, S, V */
} onn_unit;

void onn_unit_default(onn_unit* u);
/* Closed-form period of one uncoupled oscillator. */
int onn_relaxation_period(const onn_unit* u, double* period, onn_error* err);

/* n units sharing `unit`; r_c and c_c are n*n row-major (inf / 0 = absent). */
int onn_network_create(int n, const onn_unit* unit, const double* r_c, const double* c_c, onn_network** out,
                       onn_error* err);
/* Hebbian-programmed network for m patterns of length n (row-major). */
int onn_network_program(int n, const onn_unit* unit, const double* patterns, int m, onn_network** out,
                        onn_error* err);
void onn_network_free(onn_network* net);
int onn_network_size(const onn_network* net);
/* Delay-encodes pixels in [-1,1], simulates `periods` nominal periods and
 * reads phases (deg) relative to oscillator 0. locked may be NULL. */
int onn_network_phases(onn_network* net, const double* pixels, double periods, double* phases_deg, int* locked,
                       onn_error* err);

/* ---- small pure helpers ---- */

/* weights_out: n*n. */
int onn_hebbian(const double* patterns, int m, int n, double* weights_out, onn_error* err);
/* n is 4 or 9; features_out[5]: vertical, horizontal, diag_main, diag_anti, uniform. */
int onn_detect_features(const double* phases_deg, int n, double theta_tol, int* features_out, onn_error* err);
double onn_count_params_reduction(int n_filters, int k);

#ifdef __cplusplus
}
#endif

#endif
