#ifndef PLANEVAL_PLANEVAL_H
#define PLANEVAL_PLANEVAL_H

/* C interface of the planeval library. Every fallible call returns a
 * pe_status; on failure pe_last_error_detail() describes the error for the
 * calling thread. Strings and buffers returned through out-parameters are
 * owned by the caller and released with pe_string_free(). */

#include <stddef.h>

#if defined(PLANEVAL_BUILDING_LIBRARY)
#define PE_API __attribute__((visibility("default")))
#else
#define PE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pe_status {
  PE_OK = 0,
  PE_INVALID_ARGUMENT,
  PE_POINT_AT_INFINITY,
  PE_INSUFFICIENT_POINTS,
  PE_DEGENERATE_CONFIGURATION,
  PE_EMPTY_REGION,
  PE_EMPTY_INPUT,
  PE_NON_POSITIVE_GROUND_TRUTH,
  PE_INSUFFICIENT_DATA,
  PE_CONSTANT_INPUT,
  PE_EMPTY_GROUP,
  PE_ALL_CELLS_INVALID,
  PE_BEHIND_CAMERA,
  PE_MALFORMED_HEADER,
  PE_TRUNCATED_DATA,
  PE_UNSUPPORTED_CHANNELS,
  PE_IO_ERROR,
  PE_PARSE_ERROR,
  PE_NO_FIT,
  PE_NOT_FOUND,
  PE_INTERNAL
} pe_status;

/* Error name as used in machine-readable output, e.g. "EmptyInput". */
PE_API const char* pe_status_name(pe_status status);
PE_API const char* pe_last_error_detail(void);
PE_API const char* pe_version(void);
PE_API void pe_string_free(char* s);

/* Worker count: explicit value when positive, else PLANEVAL_WORKERS, else
 * the number of hardware threads. */
PE_API pe_status pe_resolve_workers(long requested, unsigned* out);

/* Homographies (image -> ground plane, meters). */
typedef struct pe_homography pe_homography;

PE_API pe_status pe_homography_create(const double matrix[9], double camera_height_m,
                                      pe_homography** out);
PE_API pe_status pe_homography_estimate(const double* image_uv, const double* plane_xy,
                                        size_t n, double camera_height_m, pe_homography** out);
PE_API pe_status pe_homography_read(const char* path, pe_homography** out);
PE_API pe_status pe_homography_write(const pe_homography* h, const char* camera_id,
                                     const char* path);
PE_API pe_status pe_homography_matrix(const pe_homography* h, double out[9]);
PE_API pe_status pe_homography_camera_height(const pe_homography* h, double* out);
PE_API pe_status pe_homography_project(const pe_homography* h, double u, double v, double* x,
                                       double* y);
PE_API pe_status pe_homography_ground_distance(const pe_homography* h, double u, double v,
                                               double* out);
PE_API void pe_homography_free(pe_homography* h);

/* Calibration sessions. */
typedef struct pe_session pe_session;

PE_API pe_status pe_session_create(const char* image_id, double camera_height_m,
                                   pe_session** out);
PE_API pe_status pe_session_read(const char* path, pe_session** out);
PE_API pe_status pe_session_write(const pe_session* s, const char* path);
PE_API pe_status pe_session_add_point(pe_session* s, double u, double v, double x, double y,
                                      size_t* index);
PE_API pe_status pe_session_remove_point(pe_session* s, size_t index);
PE_API pe_status pe_session_point_count(const pe_session* s, size_t* out);
/* residuals may be NULL; otherwise it must hold point_count entries. */
PE_API pe_status pe_session_fit(const pe_session* s, pe_homography** out, double* residuals);
PE_API void pe_session_free(pe_session* s);

/* Depth rasters. */
typedef struct pe_raster pe_raster;

PE_API pe_status pe_raster_create(size_t width, size_t height, const double* values,
                                  pe_raster** out);
PE_API pe_status pe_raster_read_pfm(const char* path, pe_raster** out);
PE_API pe_status pe_raster_write_pfm(const pe_raster* r, const char* path);
PE_API pe_status pe_raster_size(const pe_raster* r, size_t* width, size_t* height);
PE_API pe_status pe_raster_extract(const pe_raster* r, const double box[4], double alpha,
                                   double beta, double* out);
PE_API void pe_raster_free(pe_raster* r);

/* Metrics. */
PE_API pe_status pe_abs_rel(const double* gt, const double* pred, size_t n, double* out);
PE_API pe_status pe_spearman(const double* a, const double* b, size_t n, double* out);

/* Runs a command-line workflow. config_json is a flat object keyed by the
 * command's long flag names. *stdout_text receives what the command prints. */
PE_API pe_status pe_run_command(const char* command, const char* config_json,
                                char** stdout_text);

/* Calibration server request router. config_json keys: "session" (path,
 * optional), "image" (path, optional), "image_type", "camera_height_m",
 * "export_dir", "camera_id". */
typedef struct pe_server pe_server;

PE_API pe_status pe_server_create(const char* config_json, pe_server** out);
PE_API pe_status pe_server_handle(pe_server* s, const char* method, const char* path,
                                  const char* query, const char* body, size_t body_len,
                                  int* status, char** content_type, char** response,
                                  size_t* response_len);
PE_API void pe_server_free(pe_server* s);

#ifdef __cplusplus
}
#endif

#endif
