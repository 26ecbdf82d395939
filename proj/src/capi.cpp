#include "eppnet/eppnet_c.h"

#include <functional>
#include <string>
#include <vector>

#include "eppnet/error.hpp"
#include "eppnet/pipeline.hpp"

struct eppnet_session {
  std::string last_error;
};

namespace {

int guard(eppnet_session* s, const std::function<int()>& fn) {
  if (!s) return 2;
  s->last_error.clear();
  try {
    return fn();
  } catch (const eppnet::Error& e) {
    s->last_error = e.what();
    switch (e.code()) {
      case eppnet::ErrorCode::ConfigError:
      case eppnet::ErrorCode::StageDependencyMissing:
      case eppnet::ErrorCode::MissingScores:
        return 1;
      default:
        return 2;
    }
  } catch (const std::exception& e) {
    s->last_error = e.what();
    return 2;
  }
}

std::vector<std::string> to_strings(const char* const* items, size_t count) {
  std::vector<std::string> out;
  for (size_t i = 0; i < count; ++i)
    if (items && items[i]) out.emplace_back(items[i]);
  return out;
}

}  // namespace

extern "C" {

eppnet_session* eppnet_session_new(void) { return new eppnet_session; }

void eppnet_session_free(eppnet_session* s) { delete s; }

const char* eppnet_last_error(const eppnet_session* s) {
  return s ? s->last_error.c_str() : "";
}

int eppnet_synth(eppnet_session* s, const char* out_dir, int classes,
                 int samples_per_class, uint64_t seed, int mode) {
  return guard(s, [&] {
    if (!out_dir) throw eppnet::Error(eppnet::ErrorCode::ConfigError, "null out_dir");
    if (mode != 0 && mode != 1)
      throw eppnet::Error(eppnet::ErrorCode::ConfigError, "mode must be 0 or 1");
    eppnet::cmd_synth(out_dir, classes, samples_per_class, seed,
                      mode == 0 ? eppnet::SynthMode::motion
                                : eppnet::SynthMode::complementary);
    return 0;
  });
}

int eppnet_run(eppnet_session* s, const char* config_path, const char* stage,
               const char* workspace, const uint64_t* seed_override,
               const char* const* modalities, size_t modality_count,
               const float* weights, size_t weight_count) {
  return guard(s, [&] {
    if (!config_path || !stage)
      throw eppnet::Error(eppnet::ErrorCode::ConfigError,
                          "config path and stage are required");
    eppnet::RunOverrides ov;
    if (workspace && workspace[0]) ov.workspace = std::string(workspace);
    if (seed_override) ov.seed = *seed_override;
    if (modality_count) ov.modalities = to_strings(modalities, modality_count);
    if (weight_count) {
      if (!weights)
        throw eppnet::Error(eppnet::ErrorCode::ConfigError, "null weights");
      ov.weights = std::vector<float>(weights, weights + weight_count);
    }
    const int rc = eppnet::cmd_run(config_path, stage, ov);
    if (rc != 0 && s->last_error.empty())
      s->last_error = "pipeline stage failed; see stderr";
    return rc;
  });
}

int eppnet_report(eppnet_session* s, const char* workspace,
                  const char* const* modalities, size_t modality_count) {
  return guard(s, [&] {
    if (!workspace)
      throw eppnet::Error(eppnet::ErrorCode::ConfigError, "null workspace");
    const int rc =
        eppnet::cmd_report(workspace, to_strings(modalities, modality_count));
    if (rc != 0 && s->last_error.empty())
      s->last_error = "report failed; see stderr";
    return rc;
  });
}

}  // extern "C"
