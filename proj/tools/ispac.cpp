// SPDX-License-Identifier: Apache-2.0
//
// ispac: near-field sensing, positioning and communication toolkit
// Copyright (C) 2026 The ispac authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "ispac/harness.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

// ISPAC_THREADS wins over --threads; zero or absent means "all cores".
std::optional<int> resolve_threads(int flag) {
  if (const char* env = std::getenv("ISPAC_THREADS")) {
    try {
      size_t used = 0;
      const int n = std::stoi(env, &used);
      if (used != std::string(env).size() || n < 0) return std::nullopt;
      flag = n;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  if (flag > 0) return flag;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

int cmd_run(const std::string& path, const std::string& out_dir, int threads_flag,
            std::optional<std::uint64_t> seed) {
  ispac::ExperimentConfig cfg;
  try {
    cfg = ispac::load_config(path);
  } catch (const ispac::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  if (seed) cfg.seed = *seed;
  const auto threads = resolve_threads(threads_flag);
  if (!threads) {
    std::cerr << "config error: ISPAC_THREADS must be a non-negative integer\n";
    return kConfigError;
  }
  try {
    const auto records = ispac::run_experiment(cfg, {*threads});
    int flagged = 0;
    for (const auto& r : records) {
      if (!r.flagged) continue;
      ++flagged;
      std::cerr << "flagged: seed " << r.seed << " sweep " << r.sweep << " " << r.variant << ": "
                << r.note << '\n';
    }
    const auto files = ispac::emit_outputs(records, cfg, out_dir);
    std::cout << records.size() << " records (" << flagged << " flagged) -> " << files.csv << '\n';
    if (files.svg) std::cout << "plot -> " << *files.svg << '\n';
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}

int cmd_validate(const std::string& path) {
  try {
    std::cout << ispac::serialize_config(ispac::load_config(path));
  } catch (const ispac::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}

int cmd_variants() {
  std::cout << "had-near  hybrid analog-digital design on the near-field channel model\n"
               "had-far   same design with users modelled by far-field (planar) responses\n"
               "fd-near   fully digital lower bound, N_RF = N_a and F = I\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ispac: near-field sensing, positioning and communication experiments"};
  app.require_subcommand(1);

  std::string run_path;
  std::string out_dir = ".";
  int threads = 0;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "run the experiment described by a JSON config");
  run->add_option("config", run_path, "experiment config (JSON)")->required();
  run->add_option("--out-dir", out_dir, "directory for relative output paths");
  run->add_option("--threads", threads, "worker threads (0 = all cores; ISPAC_THREADS overrides)")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--seed", seed, "override the config seed");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "check a config and print its canonical form");
  validate->add_option("config", validate_path, "experiment config (JSON)")->required();

  auto* variants = app.add_subcommand("variants", "list the compared designs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (run->parsed()) return cmd_run(run_path, out_dir, threads, seed);
  if (validate->parsed()) return cmd_validate(validate_path);
  if (variants->parsed()) return cmd_variants();
  return kConfigError;
}
