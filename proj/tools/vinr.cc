// Copyright 2026 The vinr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// vinr command-line tool: prior training, compression, decompression and
// rate-distortion sweeps.
#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "vinr/data_io.h"
#include "vinr/errors.h"
#include "vinr/pipeline.h"
#include "vinr/prior_learning.h"
#include "vinr/random.h"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

// Bad flag values discovered after parsing. Maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string hex(const vinr::Sha256Digest& digest) {
  std::ostringstream s;
  for (auto b : digest) s << std::hex << std::setw(2) << std::setfill('0') << int{b};
  return s.str();
}

// Runs a validate() call, turning InvalidArgument into a usage error.
template <typename F>
void check_flags(F&& validate) {
  try {
    validate();
  } catch (const vinr::InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

bool is_signal_file(const fs::path& p) {
  static const std::vector<std::string> kExt = {".png", ".ppm", ".pgm", ".pnm", ".wav"};
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return std::find(kExt.begin(), kExt.end(), ext) != kExt.end();
}

// Files are taken as given; directories contribute their signal files in
// name order.
std::vector<std::string> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<std::string> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<std::string> found;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.is_regular_file() && is_signal_file(e.path())) found.push_back(e.path().string());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(in);
    }
  }
  return out;
}

Json config_json(const vinr::INRConfig& c) {
  return {{"input_dim", c.input_dim},
          {"output_dim", c.output_dim},
          {"layers", c.num_layers},
          {"hidden", c.hidden_units},
          {"fourier", c.fourier_embeddings},
          {"frequency_scale", c.frequency_scale},
          {"omega0", c.omega0},
          {"parameters", vinr::param_count(c)}};
}

Json descriptor_json(const vinr::SignalDescriptor& d) {
  if (d.kind == vinr::SignalKind::kAudio) {
    return {{"kind", "audio"}, {"samples", d.num_samples}, {"sample_rate", d.sample_rate}};
  }
  return {{"kind", "image"}, {"height", d.height}, {"width", d.width}, {"channels", d.channels}};
}

Json metrics_json(const vinr::Metrics& m, const vinr::SignalDescriptor& d) {
  Json j = {{"bits", m.bits_total}};
  if (d.kind == vinr::SignalKind::kAudio) {
    j["kbps"] = m.bits_per_unit / 1000.0;
  } else {
    j["bpp"] = m.bits_per_unit;
  }
  j["mse"] = m.mse;
  // JSON has no infinity; an exact reconstruction reports null.
  j["psnr_db"] = std::isfinite(m.psnr_db) ? Json(m.psnr_db) : Json(nullptr);
  return j;
}

void write_manifest(const Json& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw vinr::IoError("cannot write manifest " + path);
  out << manifest.dump(2) << '\n';
  if (!out) throw vinr::IoError("failed writing manifest " + path);
}

std::string default_manifest(const std::string& out_path) { return out_path + ".json"; }

// ---------------------------------------------------------------------------
// Shared compression flags.

struct CompressFlags {
  double kappa = 16.0;
  double t = 0.0;
  int fit_iters = 25000;
  int fine_tune_iters = 15;
  double lr = 2e-4;
  double var_init = 9e-6;
  double lambda_step = 1.05;
  double batch_fraction = 1.0;
  double lambda_floor = 0.0;
  int adjust_period = 15;
  double buffer = 0.4;
  std::optional<double> lambda_init;
  int max_log2_samples = 24;
  bool histogram = false;
  bool no_cap_guard = false;
  std::string proposals = "pseudo";
  std::uint64_t seed = 0;

  void add_to(CLI::App* app) {
    app->add_option("--kappa", kappa, "Bit budget per block")->check(CLI::PositiveNumber);
    app->add_option("--t", t, "Extra A* overhead bits per block")->check(CLI::NonNegativeNumber);
    app->add_option("--fit-iters", fit_iters, "Posterior fitting iterations")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--fine-tune-iters", fine_tune_iters,
                    "Fine-tuning iterations between blocks (0 disables)")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--lr", lr, "Adam learning rate")->check(CLI::PositiveNumber);
    app->add_option("--var-init", var_init, "Initial posterior variance cap")
        ->check(CLI::PositiveNumber);
    app->add_option("--lambda-step", lambda_step, "Multiplicative rate-control step");
    app->add_option("--batch-fraction", batch_fraction, "Share of points used per step")
        ->check(CLI::Range(0.0, 1.0));
    app->add_option("--lambda-floor", lambda_floor,
                    "Lower bound on each KL weight, as a multiple of its initial value")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--adjust-period", adjust_period, "Iterations between rate-control updates")
        ->check(CLI::PositiveNumber);
    app->add_option("--buffer", buffer, "Rate-control dead band below kappa, in bits")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--lambda-init", lambda_init, "Initial KL weight (default: the prior's beta)")
        ->check(CLI::PositiveNumber);
    app->add_option("--max-log2-samples", max_log2_samples, "Cap on A* proposals, as log2")
        ->check(CLI::Range(0, 40));
    app->add_flag("--histogram", histogram, "Range-code indices with the prior's histogram");
    app->add_flag("--no-cap-guard", no_cap_guard,
                  "Let fine-tuning push open blocks past the proposal cap");
    app->add_option("--proposals", proposals, "Proposal source")
        ->check(CLI::IsMember({"pseudo", "sobol"}));
    app->add_option("--seed", seed, "Base seed");
  }

  vinr::CompressionSettings settings() const {
    vinr::CompressionSettings s;
    s.kappa_bits = kappa;
    s.t_bits = t;
    s.max_samples_cap = std::uint64_t{1} << max_log2_samples;
    s.use_histogram = histogram;
    s.guard_sample_cap = !no_cap_guard;
    s.proposals = proposals == "sobol" ? vinr::ProposalKind::kSobol
                                       : vinr::ProposalKind::kPseudoRandom;
    s.seed = seed;
    auto& f = s.fine_tune;
    f.fit_iterations = fit_iters;
    f.inter_block_iterations = fine_tune_iters;
    f.learning_rate = lr;
    f.posterior_var_init = var_init;
    f.lambda_step = lambda_step;
    f.adjust_period = adjust_period;
    f.buffer_bits = buffer;
    f.lambda_init = lambda_init;
    f.batch_fraction = batch_fraction;
    f.lambda_floor = lambda_floor;
    check_flags([&] { f.validate(); });
    return s;
  }

  Json to_json() const {
    Json j = {{"kappa", kappa},
              {"t", t},
              {"fit_iters", fit_iters},
              {"fine_tune_iters", fine_tune_iters},
              {"lr", lr},
              {"var_init", var_init},
              {"lambda_step", lambda_step},
              {"batch_fraction", batch_fraction},
              {"lambda_floor", lambda_floor},
              {"adjust_period", adjust_period},
              {"buffer", buffer},
              {"lambda_init", lambda_init ? Json(*lambda_init) : Json(nullptr)},
              {"max_log2_samples", max_log2_samples},
              {"histogram", histogram},
              {"cap_guard", !no_cap_guard},
              {"proposals", proposals}};
    return j;
  }
};

Json seeds_json(std::uint64_t seed) {
  return {{"base", seed},
          {"permutation", vinr::derive_seed(seed, "permutation")},
          {"proposals", vinr::derive_seed(seed, "proposals")},
          {"gumbel", vinr::derive_seed(seed, "gumbel")},
          {"noise", vinr::derive_seed(seed, "noise")}};
}

Json command_json(const std::vector<std::string>& argv) { return Json(argv); }

// ---------------------------------------------------------------------------
// train-prior

struct TrainFlags {
  std::string data_dir;
  std::string out;
  std::string manifest;
  double beta = 0.0;
  int layers = 4;
  int hidden = 16;
  int fourier = 32;
  double frequency_scale = 10.0;
  double omega0 = 30.0;
  int epochs = 128;
  int iters_per_epoch = 100;
  int first_epoch_iters = 250;
  double lr = 2e-4;
  double var_init = 9e-6;
  bool frozen_noise = false;
  double early_stop = 0.0;
  double batch_fraction = 1.0;
  int jobs = 1;
  std::uint64_t seed = 0;
  bool index_histogram = false;
  CompressFlags histogram_flags;
};

struct TrainingSet {
  std::vector<std::string> files;
  std::vector<vinr::SignalBatch> batches;
  vinr::SignalDescriptor first;
};

TrainingSet load_training_set(const std::string& dir) {
  TrainingSet set;
  set.files = expand_inputs({dir});
  if (set.files.empty()) throw UsageError("no signal files in " + dir);
  for (const auto& f : set.files) {
    auto loaded = vinr::load_signal(f);
    if (set.batches.empty()) {
      set.first = loaded.descriptor;
    } else if (loaded.descriptor.input_dim() != set.first.input_dim() ||
               loaded.descriptor.output_dim() != set.first.output_dim()) {
      throw vinr::InvalidArgument(f + ": signal dimensions differ from " + set.files.front());
    }
    set.batches.push_back(std::move(loaded.batch));
  }
  return set;
}

int run_train_prior(const TrainFlags& fl, const std::vector<std::string>& argv) {
  vinr::INRConfig config;
  config.num_layers = fl.layers;
  config.hidden_units = fl.hidden;
  config.fourier_embeddings = fl.fourier;
  config.frequency_scale = fl.frequency_scale;
  config.omega0 = fl.omega0;
  vinr::TrainingSchedule schedule;
  schedule.epochs = fl.epochs;
  schedule.iters_per_epoch = fl.iters_per_epoch;
  schedule.first_epoch_iters = fl.first_epoch_iters;
  schedule.learning_rate = fl.lr;
  schedule.posterior_var_init = fl.var_init;
  schedule.frozen_noise = fl.frozen_noise;
  schedule.early_stop_tolerance = fl.early_stop;
  schedule.batch_fraction = fl.batch_fraction;
  schedule.jobs = fl.jobs;
  check_flags([&] { schedule.validate(); });
  auto histogram_settings = fl.histogram_flags.settings();

  const auto set = load_training_set(fl.data_dir);
  config.input_dim = set.first.input_dim();
  config.output_dim = set.first.output_dim();
  check_flags([&] { config.validate(); });

  const auto start = Clock::now();
  auto result = vinr::learn_prior(set.batches, config, fl.beta, schedule, fl.seed);
  const double train_seconds = seconds_since(start);

  double histogram_seconds = 0.0;
  if (fl.index_histogram) {
    // Empirical index statistics from coding every training signal.
    const auto hstart = Clock::now();
    histogram_settings.use_histogram = false;
    std::vector<vinr::EncodedBlock> blocks;
    for (std::size_t i = 0; i < set.files.size(); ++i) {
      const auto loaded = vinr::load_signal(set.files[i]);
      auto s = histogram_settings;
      s.seed = vinr::derive_seed(fl.seed, "histogram", i);
      const auto r = vinr::compress(loaded.batch, loaded.descriptor, result.model, s);
      blocks.insert(blocks.end(), r.blocks.begin(), r.blocks.end());
    }
    result.model.index_histogram = vinr::build_index_histogram(blocks);
    result.model.refresh_hash();
    histogram_seconds = seconds_since(hstart);
  }
  vinr::save_prior(result.model, fl.out);

  const auto& kl = result.model.per_weight_kl_bits;
  const auto [lo, hi] = std::minmax_element(kl.begin(), kl.end());
  double sum = 0.0;
  for (double v : kl) sum += v;
  Json manifest = {
      {"command", command_json(argv)},
      {"config", config_json(config)},
      {"schedule",
       {{"beta", fl.beta},
        {"epochs", fl.epochs},
        {"iters_per_epoch", fl.iters_per_epoch},
        {"first_epoch_iters", fl.first_epoch_iters},
        {"lr", fl.lr},
        {"var_init", fl.var_init},
        {"frozen_noise", fl.frozen_noise},
        {"early_stop", fl.early_stop},
        {"batch_fraction", fl.batch_fraction},
        {"jobs", fl.jobs}}},
      {"seeds", {{"base", fl.seed}, {"fourier", result.model.fourier_seed}}},
      {"data", set.files},
      {"epochs_run", result.epochs_run},
      {"objective_after_prior", result.objective_after_prior},
      {"c_beta_bits", result.model.c_beta_bits},
      {"per_weight_kl_bits",
       {{"min", kl.empty() ? 0.0 : *lo},
        {"mean", kl.empty() ? 0.0 : sum / kl.size()},
        {"max", kl.empty() ? 0.0 : *hi},
        {"total", sum}}},
      {"index_histogram", fl.index_histogram},
      {"timings", {{"training_s", train_seconds}, {"histogram_s", histogram_seconds}}},
      {"prior_hash", hex(result.model.content_hash)},
      {"output", fl.out}};
  write_manifest(manifest, fl.manifest.empty() ? default_manifest(fl.out) : fl.manifest);
  std::cout << "prior: " << vinr::param_count(config) << " parameters, c_beta "
            << result.model.c_beta_bits << " bits -> " << fl.out << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// compress

struct CompressCmdFlags {
  std::string input;
  std::string prior;
  std::string out;
  std::string manifest;
  std::string recon;
  CompressFlags codec;
};

int run_compress(const CompressCmdFlags& fl, const std::vector<std::string>& argv) {
  const auto settings = fl.codec.settings();
  const auto prior = vinr::load_prior(fl.prior);
  const auto loaded = vinr::load_signal(fl.input);

  const auto start = Clock::now();
  const auto result = vinr::compress(loaded.batch, loaded.descriptor, prior, settings);
  const double encode_seconds = seconds_since(start);
  vinr::save_compressed(result.object, fl.out);
  if (!fl.recon.empty()) vinr::save_signal(result.reconstruction, loaded.descriptor, fl.recon);

  const auto metrics = vinr::measure(result.object, result.reconstruction, loaded.batch.targets);
  std::vector<int> widths(result.object.header.index_widths.begin(),
                          result.object.header.index_widths.end());
  Json manifest = {
      {"command", command_json(argv)},
      {"input", fl.input},
      {"prior", fl.prior},
      {"prior_hash", hex(prior.content_hash)},
      {"config", config_json(prior.config)},
      {"signal", descriptor_json(loaded.descriptor)},
      {"settings", fl.codec.to_json()},
      {"seeds", seeds_json(settings.seed)},
      {"blocks",
       {{"count", result.object.header.num_blocks()},
        {"delta_bits", result.block_kl_bits},
        {"fit_delta_bits", result.fit_block_kl_bits},
        {"index_widths", widths},
        {"guarded_stops", result.guarded_stops},
        {"payload_bits", result.object.payload.bit_count}}},
      {"timings",
       {{"posterior_fitting_s", result.fit_seconds},
        {"rec_and_fine_tuning_s", result.rec_seconds},
        {"total_s", encode_seconds}}},
      {"metrics", metrics_json(metrics, loaded.descriptor)},
      {"output", fl.out}};
  write_manifest(manifest, fl.manifest.empty() ? default_manifest(fl.out) : fl.manifest);
  std::cout << "compressed " << fl.input << ": " << metrics.bits_total << " bits, psnr "
            << metrics.psnr_db << " dB -> " << fl.out << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// decompress

struct DecompressFlags {
  std::string input;
  std::string prior;
  std::string out;
  std::string reference;
  std::string manifest;
};

int run_decompress(const DecompressFlags& fl, const std::vector<std::string>& argv) {
  const auto prior = vinr::load_prior(fl.prior);
  const auto object = vinr::load_compressed(fl.input);
  const auto start = Clock::now();
  const auto reconstruction = vinr::decompress(object, prior);
  const double decode_seconds = seconds_since(start);
  vinr::save_signal(reconstruction, object.header.signal, fl.out);

  Json manifest = {{"command", command_json(argv)},
                   {"input", fl.input},
                   {"prior", fl.prior},
                   {"signal", descriptor_json(object.header.signal)},
                   {"timings", {{"decode_s", decode_seconds}}},
                   {"output", fl.out}};
  if (!fl.reference.empty()) {
    const auto ref = vinr::load_signal(fl.reference);
    if (!(ref.descriptor == object.header.signal)) {
      throw vinr::InvalidArgument("reference shape differs from the compressed signal");
    }
    const auto metrics = vinr::measure(object, reconstruction, ref.batch.targets);
    manifest["metrics"] = metrics_json(metrics, ref.descriptor);
    std::cout << "psnr " << std::setprecision(17) << metrics.psnr_db << " dB\n";
  }
  write_manifest(manifest, fl.manifest.empty() ? default_manifest(fl.out) : fl.manifest);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// rd-curve

struct CurveFlags {
  std::vector<std::string> inputs;
  std::vector<std::string> priors;
  std::string out;
  int jobs = 1;
  CompressFlags codec;
};

struct CurveRow {
  std::string datum;
  double beta = 0.0;
  bool ok = false;
  vinr::Metrics metrics;
  double encode_s = 0.0;
  double decode_s = 0.0;
};

CurveRow curve_point(const std::string& file, const vinr::PriorModel& prior,
                     const vinr::CompressionSettings& settings) {
  CurveRow row;
  row.datum = file;
  row.beta = prior.beta;
  const auto loaded = vinr::load_signal(file);
  const auto start = Clock::now();
  const auto result = vinr::compress(loaded.batch, loaded.descriptor, prior, settings);
  row.encode_s = seconds_since(start);
  const auto dstart = Clock::now();
  const auto decoded = vinr::decompress(vinr::deserialize_compressed(
                                            vinr::serialize_compressed(result.object)),
                                        prior);
  row.decode_s = seconds_since(dstart);
  if (decoded != result.reconstruction) throw vinr::Error("decoded signal differs from encoder");
  row.metrics = vinr::measure(result.object, decoded, loaded.batch.targets);
  row.ok = true;
  return row;
}

int run_rd_curve(const CurveFlags& fl) {
  const auto settings = fl.codec.settings();
  const auto files = expand_inputs(fl.inputs);
  if (files.empty()) throw UsageError("no input signals");
  std::vector<vinr::PriorModel> priors;
  for (const auto& p : fl.priors) priors.push_back(vinr::load_prior(p));

  std::vector<CurveRow> rows(files.size() * priors.size());
  std::vector<std::string> errors(rows.size());
  // Workers split the files; each file runs its priors in order.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t f = next++; f < files.size(); f = next++) {
      for (std::size_t p = 0; p < priors.size(); ++p) {
        const std::size_t i = f * priors.size() + p;
        try {
          rows[i] = curve_point(files[f], priors[p], settings);
        } catch (const std::exception& e) {
          rows[i].datum = files[f];
          rows[i].beta = priors[p].beta;
          errors[i] = e.what();
        }
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(fl.jobs, static_cast<int>(files.size())));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ofstream out(fl.out);
  if (!out) throw vinr::IoError("cannot write " + fl.out);
  out << "datum,beta,bits,bpp,psnr_db,encode_s,decode_s\n";
  out << std::setprecision(10);
  int failures = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out << r.datum << ',' << r.beta << ',';
    if (r.ok) {
      out << r.metrics.bits_total << ',' << r.metrics.bits_per_unit << ',' << r.metrics.psnr_db
          << ',' << r.encode_s << ',' << r.decode_s << '\n';
    } else {
      // Failed rows keep their identity and carry "failed" in every value.
      out << "failed,failed,failed,failed,failed\n";
      std::cerr << "error: " << r.datum << " (beta " << r.beta << "): " << errors[i] << '\n';
      ++failures;
    }
  }
  if (!out) throw vinr::IoError("failed writing " + fl.out);
  return failures ? kExitRuntime : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"Variational INR codec with relative entropy coding"};
  app.set_config("--config", "", "TOML config file; command-line flags take precedence");
  app.require_subcommand(1);

  TrainFlags train;
  auto* train_cmd = app.add_subcommand("train-prior", "Learn a weight prior from a dataset");
  train_cmd->add_option("--data", train.data_dir, "Directory of training signals")
      ->required()
      ->check(CLI::ExistingDirectory);
  train_cmd->add_option("--out", train.out, "Output prior file")->required();
  train_cmd->add_option("--manifest", train.manifest, "Manifest path (default: <out>.json)");
  train_cmd->add_option("--beta", train.beta, "Rate-distortion trade-off")
      ->required()
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--layers", train.layers, "Dense layers");
  train_cmd->add_option("--hidden", train.hidden, "Hidden units per layer");
  train_cmd->add_option("--fourier", train.fourier, "Fourier embedding count");
  train_cmd->add_option("--frequency-scale", train.frequency_scale, "Fourier frequency scale");
  train_cmd->add_option("--omega0", train.omega0, "Sine activation frequency");
  train_cmd->add_option("--epochs", train.epochs, "Coordinate-descent epochs");
  train_cmd->add_option("--iters-per-epoch", train.iters_per_epoch, "Posterior steps per epoch");
  train_cmd->add_option("--first-epoch-iters", train.first_epoch_iters,
                        "Posterior steps in the first epoch");
  train_cmd->add_option("--lr", train.lr, "Adam learning rate");
  train_cmd->add_option("--var-init", train.var_init, "Initial posterior variance");
  train_cmd->add_flag("--frozen-noise", train.frozen_noise, "Reuse one noise draw");
  train_cmd->add_option("--early-stop", train.early_stop, "Relative improvement threshold");
  train_cmd->add_option("--batch-fraction", train.batch_fraction, "Share of points used per step")
      ->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--jobs", train.jobs, "Parallel posterior workers")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", train.seed, "Base seed");
  train_cmd->add_flag("--index-histogram", train.index_histogram,
                      "Code the training set and store the A* index histogram");
  auto* hist_group = train_cmd->add_option_group("histogram", "Coding flags for --index-histogram");
  hist_group->add_option("--hist-kappa", train.histogram_flags.kappa)->check(CLI::PositiveNumber);
  hist_group->add_option("--hist-fit-iters", train.histogram_flags.fit_iters)
      ->check(CLI::NonNegativeNumber);
  hist_group->add_option("--hist-fine-tune-iters", train.histogram_flags.fine_tune_iters)
      ->check(CLI::NonNegativeNumber);
  hist_group->add_option("--hist-lr", train.histogram_flags.lr)->check(CLI::PositiveNumber);

  CompressCmdFlags comp;
  auto* comp_cmd = app.add_subcommand("compress", "Compress one signal");
  comp_cmd->add_option("--input", comp.input, "Signal file")->required()->check(CLI::ExistingFile);
  comp_cmd->add_option("--prior", comp.prior, "Prior file")->required()->check(CLI::ExistingFile);
  comp_cmd->add_option("--out", comp.out, "Output stream")->required();
  comp_cmd->add_option("--manifest", comp.manifest, "Manifest path (default: <out>.json)");
  comp_cmd->add_option("--recon", comp.recon, "Also write the encoder-side reconstruction");
  comp.codec.add_to(comp_cmd);

  DecompressFlags dec;
  auto* dec_cmd = app.add_subcommand("decompress", "Reconstruct a signal from a stream");
  dec_cmd->add_option("--input", dec.input, "Compressed stream")
      ->required()
      ->check(CLI::ExistingFile);
  dec_cmd->add_option("--prior", dec.prior, "Prior file")->required()->check(CLI::ExistingFile);
  dec_cmd->add_option("--out", dec.out, "Output signal file")->required();
  dec_cmd->add_option("--reference", dec.reference, "Original signal; prints PSNR")
      ->check(CLI::ExistingFile);
  dec_cmd->add_option("--manifest", dec.manifest, "Manifest path (default: <out>.json)");

  CurveFlags curve;
  auto* curve_cmd = app.add_subcommand("rd-curve", "Rate-distortion points for data x priors");
  curve_cmd->add_option("--input", curve.inputs, "Signal files or directories")->required();
  curve_cmd->add_option("--prior", curve.priors, "Prior files, one per beta")
      ->required()
      ->check(CLI::ExistingFile);
  curve_cmd->add_option("--out", curve.out, "CSV output")->required();
  curve_cmd->add_option("--jobs", curve.jobs, "Files processed in parallel")
      ->check(CLI::PositiveNumber);
  curve.codec.add_to(curve_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*train_cmd) return run_train_prior(train, args);
    if (*comp_cmd) return run_compress(comp, args);
    if (*dec_cmd) return run_decompress(dec, args);
    if (*curve_cmd) return run_rd_curve(curve);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
