#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eppnet/eppnet_c.h"

namespace {

std::vector<const char*> c_ptrs(const std::vector<std::string>& items) {
  std::vector<const char*> out;
  out.reserve(items.size());
  for (const auto& s : items) out.push_back(s.c_str());
  return out;
}

int finish(eppnet_session* session, int rc) {
  if (rc != 0) {
    const char* msg = eppnet_last_error(session);
    if (msg && msg[0]) std::fprintf(stderr, "error: %s\n", msg);
  }
  eppnet_session_free(session);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dual-branch action recognition pipeline"};
  app.require_subcommand(1);

  // synth
  std::string synth_out;
  int synth_classes = 4;
  int synth_per_class = 16;
  uint64_t synth_seed = 1;
  std::string synth_mode = "motion";
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--classes", synth_classes, "number of action classes");
  synth->add_option("--per-class", synth_per_class, "samples per class");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--mode", synth_mode, "motion|complementary")
      ->check(CLI::IsMember({"motion", "complementary"}));

  // run
  std::string run_config;
  std::string run_stage = "all";
  std::string run_workspace;
  uint64_t run_seed = 0;
  bool run_seed_set = false;
  std::vector<std::string> run_modalities;
  std::vector<float> run_weights;
  auto* run = app.add_subcommand("run", "run pipeline stages");
  run->add_option("--config", run_config, "pipeline config JSON")->required();
  run->add_option("--stage", run_stage,
                  "prepare|derive|parsemap|train|eval|fuse|report|all");
  run->add_option("--workspace", run_workspace, "override workspace directory");
  run->add_option("--seed", run_seed, "override seed")
      ->each([&](const std::string&) { run_seed_set = true; });
  run->add_option("--modalities", run_modalities,
                  "restrict to these modalities (J B JM BM P)");
  run->add_option("--weights", run_weights,
                  "fusion weights aligned with --modalities");

  // report
  std::string report_workspace;
  std::vector<std::string> report_modalities;
  auto* report = app.add_subcommand("report", "rebuild the fusion report");
  report->add_option("--workspace", report_workspace, "pipeline workspace")
      ->required();
  report->add_option("--modalities", report_modalities,
                     "modalities to include (default: all with scores)");

  CLI11_PARSE(app, argc, argv);

  eppnet_session* session = eppnet_session_new();
  if (synth->parsed()) {
    return finish(session,
                  eppnet_synth(session, synth_out.c_str(), synth_classes,
                               synth_per_class, synth_seed,
                               synth_mode == "motion" ? 0 : 1));
  }
  if (run->parsed()) {
    const auto mods = c_ptrs(run_modalities);
    return finish(session,
                  eppnet_run(session, run_config.c_str(), run_stage.c_str(),
                             run_workspace.c_str(),
                             run_seed_set ? &run_seed : nullptr, mods.data(),
                             mods.size(), run_weights.data(),
                             run_weights.size()));
  }
  const auto mods = c_ptrs(report_modalities);
  return finish(session, eppnet_report(session, report_workspace.c_str(),
                                       mods.data(), mods.size()));
}
