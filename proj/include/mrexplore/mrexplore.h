#ifndef MREXPLORE_H
#define MREXPLORE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define MRX_API __attribute__((visibility("default")))
#else
#define MRX_API
#endif

typedef enum mrx_status {
  MRX_OK = 0,
  MRX_ERR_INVALID_ARGUMENT = 1,
  MRX_ERR_CONFIG = 2,
  MRX_ERR_SCENARIO = 3,
  MRX_ERR_IO = 4,
  MRX_ERR_CONTROL = 5,
  MRX_ERR_NETWORK = 6,
  MRX_ERR_INTERNAL = 7
} mrx_status;

typedef struct mrx_mission mrx_mission;

typedef struct mrx_robot_info {
  int id;
  double x, y, z, yaw;
  double distance;
  int stopped;
  int completed;
  int has_goal;
  double goal_x, goal_y, goal_z;
} mrx_robot_info;

/* Message of the last failed call on this thread ("" if none). */
MRX_API const char* mrx_last_error(void);
MRX_API const char* mrx_version(void);
/* Frees strings returned through char** out-parameters. */
MRX_API void mrx_string_free(char* s);

/* scenario_text: scenario file contents. config_text: optional key=value
   overrides applied after the scenario's [params]. coverage_map: optional
   point map text; required when the resulting mode is coverage. */
MRX_API mrx_status mrx_mission_create(const char* scenario_text, const char* config_text, const char* coverage_map,
                                      mrx_mission** out);
MRX_API void mrx_mission_destroy(mrx_mission* m);

/* Runs up to `ticks` ticks, stopping early once the mission is finished. */
MRX_API mrx_status mrx_mission_step(mrx_mission* m, int64_t ticks, int* finished);
/* Runs to completion or max_ticks. */
MRX_API mrx_status mrx_mission_run(mrx_mission* m);
MRX_API mrx_status mrx_mission_now(const mrx_mission* m, int64_t* tick);
MRX_API mrx_status mrx_mission_finished(const mrx_mission* m, int* finished);
MRX_API mrx_status mrx_mission_robot_count(const mrx_mission* m, int* count);
MRX_API mrx_status mrx_mission_robot(const mrx_mission* m, int robot_id, mrx_robot_info* info);
MRX_API mrx_status mrx_mission_union_volume(const mrx_mission* m, double* volume);
MRX_API mrx_status mrx_mission_trace_digest(const mrx_mission* m, uint64_t* digest);

/* Applies a control command now (between ticks). cmd is one of add_poi,
   set_fence, stop, resume, force_goal, save, load; args_json is a JSON object. */
MRX_API mrx_status mrx_mission_control(mrx_mission* m, const char* cmd, const char* args_json, int64_t* applied_tick);

MRX_API mrx_status mrx_mission_metrics_csv(const mrx_mission* m, char** out);
MRX_API mrx_status mrx_mission_summary_json(const mrx_mission* m, char** out);
/* Keeps (1) or discards (0) trace lines; the running digest is always kept. */
MRX_API mrx_status mrx_mission_set_trace_recording(mrx_mission* m, int enabled);
/* Message trace as JSON lines. */
MRX_API mrx_status mrx_mission_trace(const mrx_mission* m, char** out);
MRX_API mrx_status mrx_mission_export_point_map(const mrx_mission* m, int robot_id, char** out);
MRX_API mrx_status mrx_mission_grid_snapshot(const mrx_mission* m, int robot_id, char** out);

MRX_API mrx_status mrx_mission_save(const mrx_mission* m, const char* path);
MRX_API mrx_status mrx_mission_load(mrx_mission* m, const char* path);

/* Starts the control/telemetry listener on 127.0.0.1 (port 0 picks one).
   Requests are applied and telemetry is sent from inside mrx_mission_step
   and mrx_mission_serve_pump. */
MRX_API mrx_status mrx_mission_serve(mrx_mission* m, int port, int64_t decimation, int* bound_port);
MRX_API mrx_status mrx_mission_serve_pump(mrx_mission* m, int* handled);
MRX_API mrx_status mrx_mission_serve_stop(mrx_mission* m);

#ifdef __cplusplus
}
#endif

#endif
