#ifndef REDESCRIBE_H
#define REDESCRIBE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call. Codes 2 to 4 match the command-line exit codes.
typedef enum RdStatus {
  RD_STATUS_OK = 0,
  // Null pointer, bad index or non-UTF-8 string.
  RD_STATUS_INVALID_ARGUMENT = 1,
  RD_STATUS_CONFIG = 2,
  // The call succeeded but produced no redescription.
  RD_STATUS_EMPTY = 3,
  RD_STATUS_IO = 4,
  // A query failed to parse or referenced an unknown attribute.
  RD_STATUS_QUERY = 5,
  // A Rust panic was caught at the boundary.
  RD_STATUS_PANIC = 6,
} RdStatus;

// A loaded configuration and its dataset.
typedef struct RdConfig RdConfig;

// A redescription set tied to the dataset it was mined from.
typedef struct RdSet RdSet;

typedef struct RdMeasures {
  double j_sc;
  double p_sc;
  double aaj_sc;
  double aej_sc;
  double comp_sc;
  double total_sc;
} RdMeasures;

typedef struct RdScores {
  size_t size;
  double entity_coverage;
  double attribute_coverage;
  struct RdMeasures underlined;
  // Unpadded means; all zero when `has_plain` is false (empty set).
  struct RdMeasures plain;
  bool has_plain;
} RdScores;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static string.
const char *rd_version(void);

// Message of the last failure on this thread, or null. Valid until the next failing call.
const char *rd_last_error(void);

// Loads a TOML config and the dataset it names.
//
// # Safety
// `path` must be a valid NUL-terminated string and `out` a valid pointer.
enum RdStatus rd_config_load(const char *path, struct RdConfig **out);

// Overrides the master seed.
//
// # Safety
// `config` must be null or a handle from [`rd_config_load`].
enum RdStatus rd_config_set_seed(struct RdConfig *config, uint64_t seed);

// Number of views in the config's dataset; 0 for a null handle.
//
// # Safety
// `config` must be null or a handle from [`rd_config_load`].
size_t rd_config_n_views(const struct RdConfig *config);

// Number of weight rows, i.e. of output sets per restart; 0 for a null handle.
//
// # Safety
// `config` must be null or a handle from [`rd_config_load`].
size_t rd_config_weight_rows(const struct RdConfig *config);

// # Safety
// `config` must be null or a handle from [`rd_config_load`] not yet freed.
void rd_config_free(struct RdConfig *config);

// Runs restart `restart` of the multi-view framework and returns the set
// selected under weight row `weight_row`. An empty result yields
// `RD_STATUS_EMPTY` together with a valid, empty set.
//
// # Safety
// `config` must be a handle from [`rd_config_load`] and `out` a valid pointer.
enum RdStatus rd_mine(const struct RdConfig *config,
                      size_t restart,
                      size_t weight_row,
                      struct RdSet **out);

// Runs restart `restart` of the naive baseline.
//
// # Safety
// `config` must be a handle from [`rd_config_load`] and `out` a valid pointer.
enum RdStatus rd_naive(const struct RdConfig *config, size_t restart, struct RdSet **out);

// Reads a redescription set file against the config's dataset.
//
// # Safety
// `config` must be a handle from [`rd_config_load`], `path` a valid
// NUL-terminated string and `out` a valid pointer.
enum RdStatus rd_set_read(const struct RdConfig *config, const char *path, struct RdSet **out);

// Number of redescriptions; 0 for a null handle.
//
// # Safety
// `set` must be null or a live set handle.
size_t rd_set_len(const struct RdSet *set);

// # Safety
// `set` must be a live set handle and `out` a valid pointer.
enum RdStatus rd_set_jaccard(const struct RdSet *set, size_t index, double *out);

// # Safety
// `set` must be a live set handle and `out` a valid pointer.
enum RdStatus rd_set_pvalue(const struct RdSet *set, size_t index, double *out);

// # Safety
// `set` must be a live set handle and `out` a valid pointer.
enum RdStatus rd_set_support_size(const struct RdSet *set, size_t index, size_t *out);

// Query text of one view, or null when the redescription has no query there.
//
// # Safety
// `set` must be a live set handle and `out` a valid pointer. A non-null
// result must be released with [`rd_string_free`].
enum RdStatus rd_set_query(const struct RdSet *set, size_t index, size_t view, char **out);

// The set in the TOML set-file format.
//
// # Safety
// `set` must be a live set handle and `out` a valid pointer. Release the
// result with [`rd_string_free`].
enum RdStatus rd_set_to_toml(const struct RdSet *set, char **out);

// Set scores under weight row `weight_row`. `expected_size` 0 uses the configured expected output size.
//
// # Safety
// `set` must be a live set handle and `out` a valid pointer.
enum RdStatus rd_set_scores(const struct RdSet *set,
                            size_t weight_row,
                            size_t expected_size,
                            struct RdScores *out);

// # Safety
// `set` must be null or a set handle not yet freed.
void rd_set_free(struct RdSet *set);

// # Safety
// `s` must be null or a string returned by this library and not yet freed.
void rd_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REDESCRIBE_H */
