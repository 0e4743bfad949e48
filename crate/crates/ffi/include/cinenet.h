#ifndef CINENET_H
#define CINENET_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum CinenetStatus {
  CINENET_STATUS_OK = 0,
  CINENET_STATUS_NULL_POINTER = 1,
  CINENET_STATUS_INVALID_UTF8 = 2,
  CINENET_STATUS_IO = 3,
  CINENET_STATUS_FORMAT = 4,
  CINENET_STATUS_INVALID_ARGUMENT = 5,
  CINENET_STATUS_INSUFFICIENT_DATA = 6,
  CINENET_STATUS_PANIC = 7,
} CinenetStatus;

typedef enum CinenetTestMethod {
  CINENET_TEST_METHOD_EXACT = 0,
  CINENET_TEST_METHOD_NORMAL_APPROX = 1,
} CinenetTestMethod;

/**
 * Loaded corpus.
 */
typedef struct CinenetCorpus CinenetCorpus;

/**
 * Per-year networks over a contiguous window.
 */
typedef struct CinenetNetworks CinenetNetworks;

/**
 * Average rate-of-change series of one focal country.
 */
typedef struct CinenetSeries CinenetSeries;

/**
 * Generator parameters. `shock_country` may be null; `has_shock` selects
 * whether `shock_year` applies.
 */
typedef struct CinenetSynthConfig {
  uint32_t n_countries;
  int32_t year_from;
  int32_t year_to;
  uint32_t base_volume;
  double cross_prob;
  bool has_shock;
  int32_t shock_year;
  const char *shock_country;
  double shock_factor;
  uint64_t seed;
} CinenetSynthConfig;

/**
 * One row of an indicator series. `avg_rho` is meaningful only when
 * `defined` is true.
 */
typedef struct CinenetIndicatorPoint {
  int32_t year;
  bool defined;
  double avg_rho;
  uintptr_t n_partners;
  int64_t abs_change;
} CinenetIndicatorPoint;

typedef struct CinenetRankTest {
  double u_statistic;
  uintptr_t n1;
  uintptr_t n2;
  double p_one_sided;
  double p_two_sided;
  enum CinenetTestMethod method;
  bool tie_correction_applied;
} CinenetRankTest;

typedef struct CinenetBoxSummary {
  double minimum;
  double q1;
  double median;
  double q3;
  double maximum;
  double lower_fence;
  double upper_fence;
  uintptr_t n_outliers;
} CinenetBoxSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *cinenet_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cinenet_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void cinenet_string_free(char *s);

/**
 * Reads a canonical corpus (`movie_id<TAB>year<TAB>regions`) from a file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CinenetStatus cinenet_corpus_read(const char *path, struct CinenetCorpus **out);

/**
 * Parses a canonical corpus held in memory.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum CinenetStatus cinenet_corpus_parse(const char *text, struct CinenetCorpus **out);

/**
 * Fills `out` with the generator defaults.
 *
 * # Safety
 * `out` must be writable.
 */
enum CinenetStatus cinenet_synth_config_default(struct CinenetSynthConfig *out);

/**
 * Generates a synthetic corpus.
 *
 * # Safety
 * `config` must point to a valid config whose `shock_country` is null or a
 * NUL-terminated string; `out` must be writable.
 */
enum CinenetStatus cinenet_corpus_synth(const struct CinenetSynthConfig *config,
                                        struct CinenetCorpus **out);

/**
 * Number of movies in the corpus; 0 for a null handle.
 *
 * # Safety
 * `corpus` must be null or a live handle.
 */
uintptr_t cinenet_corpus_len(const struct CinenetCorpus *corpus);

/**
 * # Safety
 * `corpus` must be null or a live handle, which is invalid afterwards.
 */
void cinenet_corpus_free(struct CinenetCorpus *corpus);

/**
 * Builds one network per year in `year_from..=year_to`.
 *
 * # Safety
 * `corpus` must be a live handle; `out` must be writable.
 */
enum CinenetStatus cinenet_networks_build(const struct CinenetCorpus *corpus,
                                          int32_t year_from,
                                          int32_t year_to,
                                          struct CinenetNetworks **out);

/**
 * Number of years held; 0 for a null handle.
 *
 * # Safety
 * `networks` must be null or a live handle.
 */
uintptr_t cinenet_networks_len(const struct CinenetNetworks *networks);

/**
 * Movies of `year` published in both `a` and `b` (the diagonal when equal).
 * Years outside the window count as zero.
 *
 * # Safety
 * `networks` must be a live handle, `a` and `b` NUL-terminated strings and
 * `out` writable.
 */
enum CinenetStatus cinenet_networks_count(const struct CinenetNetworks *networks,
                                          int32_t year,
                                          const char *a,
                                          const char *b,
                                          uint64_t *out);

/**
 * Matrix dump (`year,country_a,country_b,count`) as a new string.
 *
 * # Safety
 * `networks` must be a live handle; `out` must be writable.
 */
enum CinenetStatus cinenet_networks_matrix_csv(const struct CinenetNetworks *networks, char **out);

/**
 * # Safety
 * `networks` must be null or a live handle, which is invalid afterwards.
 */
void cinenet_networks_free(struct CinenetNetworks *networks);

/**
 * Indicator series of `focal` against every country whose total exceeds
 * `min_total`.
 *
 * # Safety
 * `networks` must be a live handle, `focal` a NUL-terminated string and
 * `out` writable.
 */
enum CinenetStatus cinenet_series_build(const struct CinenetNetworks *networks,
                                        const char *focal,
                                        uint64_t min_total,
                                        bool allow_outside_list,
                                        struct CinenetSeries **out);

/**
 * Number of years in the series; 0 for a null handle.
 *
 * # Safety
 * `series` must be null or a live handle.
 */
uintptr_t cinenet_series_len(const struct CinenetSeries *series);

/**
 * Row `index` of the series.
 *
 * # Safety
 * `series` must be a live handle; `out` must be writable.
 */
enum CinenetStatus cinenet_series_point(const struct CinenetSeries *series,
                                        uintptr_t index,
                                        struct CinenetIndicatorPoint *out);

/**
 * Indicator CSV (with header) for the series.
 *
 * # Safety
 * `series` must be a live handle; `out` must be writable.
 */
enum CinenetStatus cinenet_series_csv(const struct CinenetSeries *series, char **out);

/**
 * Scans every defined year against the rest and returns the JSON report.
 *
 * # Safety
 * `series` must be a live handle; `out` must be writable.
 */
enum CinenetStatus cinenet_series_scan_json(const struct CinenetSeries *series,
                                            double alpha,
                                            char **out);

/**
 * # Safety
 * `series` must be null or a live handle, which is invalid afterwards.
 */
void cinenet_series_free(struct CinenetSeries *series);

/**
 * Rank-sum test of `sample1` against `sample2`: exact when untied and small
 * enough, otherwise the normal approximation.
 *
 * # Safety
 * `sample1` and `sample2` must point to `n1` and `n2` doubles; `out` must
 * be writable.
 */
enum CinenetStatus cinenet_mann_whitney(const double *sample1,
                                        uintptr_t n1,
                                        const double *sample2,
                                        uintptr_t n2,
                                        struct CinenetRankTest *out);

/**
 * Five-number summary with 1.5 IQR fences.
 *
 * # Safety
 * `values` must point to `n` doubles; `out` must be writable.
 */
enum CinenetStatus cinenet_box_summary(const double *values,
                                       uintptr_t n,
                                       struct CinenetBoxSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CINENET_H */
