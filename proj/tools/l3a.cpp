/*
 * Copyright 2026 The L3A Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command line front end: gen, train, eval, oracle, inspect.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "l3a/l3a.hpp"

namespace fs = std::filesystem;
using namespace l3a;

namespace {

struct ConfigFlags {
  RunConfig config;
  std::string weighting = "inv-sqrt";
  std::string transform = "sigmoid";

  void attach(CLI::App* app) {
    app->add_option("--gamma", config.gamma, "ridge regularization")->capture_default_str();
    app->add_option("--buffer-size", config.buffer_size, "buffer layer width")
        ->capture_default_str();
    app->add_option("--eta", config.eta, "pseudo-label threshold")->capture_default_str();
    app->add_option("--weighting", weighting, "class weighting")
        ->check(CLI::IsMember({"inv-sqrt", "inv", "inv-log", "none"}))
        ->capture_default_str();
    app->add_option("--transform", transform, "score transform")
        ->check(CLI::IsMember({"sigmoid", "identity"}))
        ->capture_default_str();
    app->add_option("--batch-size", config.batch_size, "Woodbury batch size")
        ->capture_default_str();
    app->add_option("--seed", config.seed, "buffer seed")->capture_default_str();
    app->add_option("--f1-threshold", config.f1_threshold, "score threshold for F1")
        ->capture_default_str();
  }

  RunConfig resolve() {
    config.weighting = parse_weighting(weighting);
    config.transform = parse_transform(transform);
    config.validate();
    return config;
  }
};

void write_json(const nlohmann::json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError(FormatErrc::io, "cannot open " + path.string());
  out << j.dump(2) << '\n';
}

fs::path checkpoint_name(std::uint32_t t) {
  return "phase" + std::to_string(t) + ".l3am";
}

std::string read_magic(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatErrc::io, "cannot open " + path.string());
  char buf[4] = {};
  in.read(buf, 4);
  return std::string(buf, static_cast<std::size_t>(in.gcount()));
}

void inspect_checkpoint(const fs::path& path) {
  const ModelState s = load_checkpoint(path);
  std::printf("checkpoint  %s\n", path.string().c_str());
  std::printf("phase       %u\n", s.phase);
  std::printf("gamma       %.17g\n", s.gamma);
  std::printf("buffer      d_in=%u d_buf=%u seed=%llu\n", s.buffer.input_dim,
              s.buffer.buffer_dim, static_cast<unsigned long long>(s.buffer.seed));
  std::printf("classes     %lld\n", static_cast<long long>(s.num_classes()));
  std::printf("frequency  ");
  for (auto f : s.freq.counts) std::printf(" %llu", static_cast<unsigned long long>(f));
  std::printf("\n");
  if (s.weights.size() > 0) {
    std::printf("|W|_F       %.6e\n", s.weights.norm());
  }
  std::printf("trace(R)    %.6e\n", s.autocorrelation.trace());
  const double asym = (s.autocorrelation - s.autocorrelation.transpose()).cwiseAbs().maxCoeff();
  std::printf("asym(R)     %.3e\n", asym);
}

void inspect_features(const fs::path& path) {
  const Matrix x = load_features(path);
  std::printf("features    %s\n", path.string().c_str());
  std::printf("shape       %lld x %lld\n", static_cast<long long>(x.rows()),
              static_cast<long long>(x.cols()));
  if (x.size() > 0) {
    std::printf("range       [%.6g, %.6g]\n", x.minCoeff(), x.maxCoeff());
  }
}

void inspect_manifest(const fs::path& path) {
  const PhaseManifest m = load_manifest(path);
  std::printf("manifest    K=%u d_in=%u T=%u\n", m.num_classes(), m.feature_dim(),
              m.num_phases());
  for (const auto& p : m.phases()) {
    std::printf("  phase %u:", p.id);
    for (auto c : p.classes) std::printf(" %u", c);
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exemplar-free multi-label class-incremental learner"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "write a synthetic phase stream");
  SyntheticSpec spec;
  std::uint32_t phases = 4;
  std::string gen_out, gen_manifest;
  gen->add_option("--num-classes", spec.num_classes)->capture_default_str();
  gen->add_option("--feature-dim", spec.feature_dim)->capture_default_str();
  gen->add_option("--samples-per-phase", spec.samples_per_phase)->capture_default_str();
  gen->add_option("--alpha", spec.imbalance_exponent, "long-tail exponent")
      ->capture_default_str();
  gen->add_option("--rho", spec.cooccurrence_strength, "co-occurrence strength")
      ->capture_default_str();
  gen->add_option("--sigma", spec.noise_sigma, "feature noise")->capture_default_str();
  gen->add_option("--phases", phases, "even split into this many phases")
      ->capture_default_str();
  gen->add_option("--seed", spec.seed)->capture_default_str();
  gen->add_option("--manifest", gen_manifest, "use this manifest instead of an even split");
  gen->add_option("--out", gen_out, "output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "learn every phase of a stream");
  ConfigFlags train_flags;
  train_flags.attach(train);
  std::string train_data, train_out, resume;
  train->add_option("--data", train_data, "stream directory")->required();
  train->add_option("--out", train_out, "output directory")->required();
  train->add_option("--resume", resume, "continue from this checkpoint");

  // eval
  auto* eval = app.add_subcommand("eval", "score a checkpoint on the cumulative test set");
  std::string eval_model, eval_data, eval_out, eval_transform = "sigmoid";
  double eval_threshold = 0.5;
  eval->add_option("--model", eval_model, "checkpoint")->required();
  eval->add_option("--data", eval_data, "stream directory")->required();
  eval->add_option("--transform", eval_transform)
      ->check(CLI::IsMember({"sigmoid", "identity"}))
      ->capture_default_str();
  eval->add_option("--f1-threshold", eval_threshold)->capture_default_str();
  eval->add_option("--out", eval_out, "output directory (default: print)");

  // oracle
  auto* oracle = app.add_subcommand("oracle", "compare the recursive classifier to a joint solve");
  ConfigFlags oracle_flags;
  oracle_flags.attach(oracle);
  std::string oracle_data, oracle_out;
  oracle->add_option("--data", oracle_data, "stream directory")->required();
  oracle->add_option("--out", oracle_out, "output directory (default: print)");

  // inspect
  auto* inspect = app.add_subcommand("inspect", "summarize a checkpoint, feature file or manifest");
  std::string inspect_path;
  inspect->add_option("path", inspect_path)->required()->check(CLI::ExistingPath);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const PhaseManifest manifest =
          gen_manifest.empty()
              ? PhaseManifest::even_split(spec.num_classes, spec.feature_dim, phases)
              : load_manifest(gen_manifest);
      const SyntheticStream s = generate_synthetic(spec, manifest);
      save_stream(gen_out, manifest, s.train, s.test);
      std::printf("wrote %u phases to %s\n", manifest.num_phases(), gen_out.c_str());
    } else if (train->parsed()) {
      const RunConfig config = train_flags.resolve();
      const PhaseManifest manifest = load_manifest(fs::path(train_data) / "manifest.json");
      const auto tr = load_splits(train_data, manifest, false);
      const auto te = load_splits(train_data, manifest, true);
      std::optional<ModelState> resumed;
      if (!resume.empty()) resumed = load_checkpoint(resume);
      fs::create_directories(train_out);
      const auto result = run_training(
          config, manifest, tr, te, std::move(resumed),
          [&](const ModelState& state, const PhaseReport& r) {
            save_checkpoint(state, fs::path(train_out) / checkpoint_name(state.phase));
            std::printf("phase %u  mAP %.4f  CF1 %.4f  OF1 %.4f  pseudo %lld\n", r.phase,
                        r.map, r.cf1, r.of1, static_cast<long long>(r.pseudo_labels));
          });
      save_checkpoint(result.state, fs::path(train_out) / "model.l3am");
      write_json(to_json(result.report, config), fs::path(train_out) / "report.json");
      std::printf("average mAP %.4f  last mAP %.4f\n", result.report.average_map,
                  result.report.last_map);
    } else if (eval->parsed()) {
      ModelState state = load_checkpoint(eval_model);
      RunConfig config;
      config.gamma = state.gamma;
      config.buffer_size = state.buffer.buffer_dim;
      config.seed = state.buffer.seed;
      config.transform = parse_transform(eval_transform);
      config.f1_threshold = eval_threshold;
      const PhaseManifest manifest = load_manifest(fs::path(eval_data) / "manifest.json");
      const auto te = load_splits(eval_data, manifest, true);
      const Learner learner(config, std::move(state));
      const PhaseReport report = evaluate(learner, manifest, te);
      nlohmann::json j = to_json(report);
      j["config"] = to_json(config);
      if (eval_out.empty()) {
        std::cout << j.dump(2) << '\n';
      } else {
        fs::create_directories(eval_out);
        write_json(j, fs::path(eval_out) / "eval.json");
      }
    } else if (oracle->parsed()) {
      const RunConfig config = oracle_flags.resolve();
      const PhaseManifest manifest = load_manifest(fs::path(oracle_data) / "manifest.json");
      const auto tr = load_splits(oracle_data, manifest, false);
      const DiffReport diff = run_oracle_compare(config, manifest, tr);
      const nlohmann::json j = to_json(diff, config);
      if (oracle_out.empty()) {
        std::cout << j.dump(2) << '\n';
      } else {
        fs::create_directories(oracle_out);
        write_json(j, fs::path(oracle_out) / "oracle.json");
        std::printf("relative frobenius %.3e  max abs %.3e  pseudo-labels %lld\n",
                    diff.relative_frobenius, diff.max_abs,
                    static_cast<long long>(diff.pseudo_labels));
      }
    } else if (inspect->parsed()) {
      const fs::path p = inspect_path;
      const std::string magic = fs::is_regular_file(p) ? read_magic(p) : "";
      if (magic == kCheckpointMagic) {
        inspect_checkpoint(p);
      } else if (magic == kFeatureMagic) {
        inspect_features(p);
      } else if (fs::is_directory(p)) {
        inspect_manifest(p / "manifest.json");
      } else {
        inspect_manifest(p);
      }
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "l3a: %s\n", e.what());
    return 1;
  }
  return 0;
}
