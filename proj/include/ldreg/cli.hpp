#pragma once

// Command-line front end. run() parses one command, executes it and writes a
// JSON report; the return value is the process exit code (0 ok, 1 usage,
// 2 data, 3 numeric).

#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ldreg/diagnostics.hpp"
#include "ldreg/error.hpp"
#include "ldreg/geometry.hpp"
#include "ldreg/io.hpp"
#include "ldreg/lidest.hpp"
#include "ldreg/matrix.hpp"
#include "ldreg/regularizers.hpp"
#include "ldreg/ssl/synthetic.hpp"
#include "ldreg/ssl/train.hpp"

namespace ldreg::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

/// Result of one command: exit code plus the report body.
struct Outcome {
  int code = kOk;
  std::string command;
  std::optional<std::uint64_t> seed;
  Json config = Json::object();
  Json result = Json::object();
  Json error;  // null on success
};

namespace detail {

inline Estimator parse_estimator(const std::string& s) {
  if (s == "pseudocode") return Estimator::mom_pseudocode;
  if (s == "text") return Estimator::mom_text;
  if (s == "mle") return Estimator::mle;
  throw UsageError("unknown estimator '" + s + "'");
}

inline MeanKind parse_mean(const std::string& s) {
  if (s == "geometric") return MeanKind::geometric;
  if (s == "arithmetic") return MeanKind::arithmetic;
  if (s == "harmonic") return MeanKind::harmonic;
  throw UsageError("unknown mean '" + s + "'");
}

inline FrechetMetric parse_metric(const std::string& s) {
  if (s == "afr") return FrechetMetric::afr;
  if (s == "akl") return FrechetMetric::akl;
  if (s == "akl-reverse") return FrechetMetric::akl_reverse;
  throw UsageError("unknown metric '" + s + "'");
}

inline RegKind parse_reg(const std::string& s) {
  if (s == "l1") return RegKind::l1;
  if (s == "l2") return RegKind::l2;
  if (s == "target") return RegKind::target_lid;
  if (s == "minlid") return RegKind::min_lid;
  if (s == "none") return RegKind::none;
  throw UsageError("unknown regularizer '" + s + "'");
}

inline std::optional<io::MatrixFormat> parse_format(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if (s == "csv") return io::MatrixFormat::csv;
  if (s == "ldm1") return io::MatrixFormat::ldm1;
  throw UsageError("unknown format '" + s + "'");
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline Json lid_summary(const LidBatch& lids) {
  const auto stats = [&](MeanKind m) { return aggregate(lids, m); };
  return Json{{"geometric", stats(MeanKind::geometric)},
              {"arithmetic", stats(MeanKind::arithmetic)},
              {"harmonic", stats(MeanKind::harmonic)}};
}

inline Json report_json(const CollapseReport& r) {
  return Json{{"n_samples", r.n_samples},
              {"dim", r.dim},
              {"k", r.k},
              {"estimator", to_string(r.estimator)},
              {"effective_rank", r.effective_rank},
              {"mlid_geometric", r.mlid_geometric},
              {"frechet_variance", r.frechet_variance},
              {"lid_quantiles",
               Json{{"p05", r.lid_quantiles[0]},
                    {"p25", r.lid_quantiles[1]},
                    {"p50", r.lid_quantiles[2]},
                    {"p75", r.lid_quantiles[3]},
                    {"p95", r.lid_quantiles[4]}}},
              {"clamped_count", r.clamped_count}};
}

inline std::string trace_csv(const ssl::TrainTrace& trace) {
  std::string out = "epoch,ssl_loss,reg_loss,mlid,erank\n";
  char buf[160];
  for (const auto& r : trace.records) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.ssl_loss, r.reg_loss,
                  r.mlid, r.erank);
    out += buf;
  }
  return out;
}

inline Json trace_json(const ssl::TrainTrace& trace) {
  Json epoch = Json::array(), ssl = Json::array(), reg = Json::array(), mlid = Json::array(),
       erank = Json::array();
  for (const auto& r : trace.records) {
    epoch.push_back(r.epoch);
    ssl.push_back(r.ssl_loss);
    reg.push_back(r.reg_loss);
    mlid.push_back(r.mlid);
    erank.push_back(r.erank);
  }
  return Json{{"epoch", epoch}, {"ssl_loss", ssl}, {"reg_loss", reg}, {"mlid", mlid},
              {"erank", erank}};
}

inline Json error_json(const std::string& kind, const std::string& message) {
  return Json{{"kind", kind}, {"message", message}};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Command options. Every field is echoed into the report after defaults are
// resolved.

struct EstimateOptions {
  std::string input;
  std::string format;
  std::size_t k = kDefaultK;
  std::string estimator = "pseudocode";
  std::string mean = "geometric";
  bool per_sample = false;
  bool clamp = false;
};

struct AfrOptions {
  double id_a = 0.0;
  double id_b = 0.0;
};

struct FrechetOptions {
  std::string input;
  std::string format;
  std::string metric = "afr";
};

struct DiagnoseOptions {
  std::string input;
  std::string format;
  std::size_t k = kDefaultK;
  std::string estimator = "pseudocode";
  bool clamp = false;
};

struct GenDataOptions {
  std::string kind;
  std::size_t n = 1000;
  std::size_t d = 2;
  std::size_t ambient = 16;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string output;
  std::string format = "csv";
};

struct TrainOptions {
  std::string mode;
  std::optional<double> target;
  std::optional<std::string> reg;
  std::optional<double> beta;
  std::optional<std::size_t> k;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
  std::optional<std::size_t> batch;
  std::optional<double> tau;
  std::uint64_t seed = 0;
  std::string trace_out;
  std::optional<std::string> optimizer;
  std::optional<std::string> estimator;
  std::string input;
  std::string format;
  std::optional<std::size_t> n;
};

struct SweepOptions {
  std::string param;
  std::vector<std::string> values;
  std::vector<std::string> base;
};

// ---------------------------------------------------------------------------

inline void cmd_estimate_lid(const EstimateOptions& o, Outcome& out) {
  const Estimator est = detail::parse_estimator(o.estimator);
  const MeanKind mean = detail::parse_mean(o.mean);
  const auto fmt = detail::parse_format(o.format);
  out.config = {{"input", o.input},      {"format", o.format.empty() ? "auto" : o.format},
                {"k", o.k},              {"estimator", o.estimator},
                {"mean", o.mean},        {"per_sample", o.per_sample},
                {"clamp", o.clamp}};
  const Matrix x = io::read_matrix(o.input, fmt);
  check_batch_shape(x, o.k);
  const LidBatch lids =
      batch_lids(x, o.k, est, o.clamp ? DegeneratePolicy::clamp : DegeneratePolicy::error);
  out.result = {{"n_samples", x.rows()},
                {"dim", x.cols()},
                {"aggregate", aggregate(lids, mean)},
                {"means", detail::lid_summary(lids)},
                {"clamped_count", lids.clamped_count}};
  if (o.per_sample) out.result["per_sample"] = lids.values;
}

inline void cmd_afr(const AfrOptions& o, Outcome& out) {
  out.config = {{"id_a", o.id_a}, {"id_b", o.id_b}};
  out.result = {{"distance", geometry::afr_distance(o.id_a, o.id_b)}};
}

inline void cmd_frechet(const FrechetOptions& o, Outcome& out) {
  const FrechetMetric metric = detail::parse_metric(o.metric);
  out.config = {{"input", o.input}, {"format", o.format.empty() ? "auto" : o.format},
                {"metric", o.metric}};
  const Matrix m = io::read_matrix(o.input, detail::parse_format(o.format));
  const LidBatch lids = LidBatch::from_values(m.values());
  for (double v : lids.values)
    if (!(v > 0.0)) throw UsageError("frechet: LID values must be positive");
  const MeanKind closed = metric == FrechetMetric::afr   ? MeanKind::geometric
                          : metric == FrechetMetric::akl ? MeanKind::arithmetic
                                                         : MeanKind::harmonic;
  const double mean = aggregate(lids, closed);
  out.result = {{"count", lids.size()},
                {"mean", mean},
                {"mean_numeric", frechet_mean_numeric(lids, metric)},
                {"variance", frechet_objective(lids, metric, mean)}};
}

inline void cmd_diagnose(const DiagnoseOptions& o, Outcome& out) {
  const Estimator est = detail::parse_estimator(o.estimator);
  out.config = {{"input", o.input}, {"format", o.format.empty() ? "auto" : o.format},
                {"k", o.k},         {"estimator", o.estimator},
                {"clamp", o.clamp}};
  const Matrix x = io::read_matrix(o.input, detail::parse_format(o.format));
  check_batch_shape(x, o.k);
  out.result =
      detail::report_json(diagnose(x, o.k, est, o.clamp ? DegeneratePolicy::clamp : DegeneratePolicy::error));
}

inline void cmd_gen_data(const GenDataOptions& o, Outcome& out) {
  out.seed = o.seed;
  const auto fmt = detail::parse_format(o.format);
  if (!fmt) throw UsageError("gen-data: --format must be csv or ldm1");
  Matrix x;
  out.config = {{"kind", o.kind}, {"n", o.n}, {"seed", o.seed}, {"output", o.output},
                {"format", o.format}};
  if (o.kind == "uniform2d") {
    x = ssl::gen_uniform_2d(o.n, o.seed);
  } else if (o.kind == "subspace" || o.kind == "pairs") {
    out.config["d"] = o.d;
    out.config["D"] = o.ambient;
    out.config["noise"] = o.noise;
    if (o.kind == "subspace") {
      x = ssl::gen_subspace_gaussian(o.n, o.d, o.ambient, o.noise, o.seed);
    } else {
      const Matrix base = ssl::gen_subspace_gaussian(o.n, o.d, o.ambient, 0.0, o.seed);
      x = ssl::gen_paired_views(base, o.noise, derive_seed(o.seed, 1));
    }
  } else {
    throw UsageError("gen-data: unknown kind '" + o.kind + "'");
  }
  io::write_matrix(o.output, x, *fmt);
  out.result = {{"rows", x.rows()}, {"cols", x.cols()}, {"output", o.output}};
}

namespace detail {

/// Default data for training when no --input is given.
inline constexpr std::size_t kTargetLidPoints = 1000;
inline constexpr std::size_t kSslPoints = 2048;
inline constexpr std::size_t kSslIntrinsic = 4;
inline constexpr std::size_t kSslAmbient = 16;
inline constexpr double kSslBaseNoise = 0.0;

template <typename Enc>
void fill_train_result(Outcome& out, const ssl::TrainResult<Enc>& r, const std::string& trace_out) {
  const auto& recs = r.trace.records;
  out.result = {{"epochs_run", recs.size()},
                {"final_mlid", r.final_mlid},
                {"final_erank", r.final_erank},
                {"final_ssl_loss", recs.empty() ? 0.0 : recs.back().ssl_loss},
                {"final_reg_loss", recs.empty() ? 0.0 : recs.back().reg_loss},
                {"trace", trace_json(r.trace)}};
  if (!trace_out.empty()) io::write_file(trace_out, trace_csv(r.trace));
}

}  // namespace detail

inline void cmd_train(const TrainOptions& o, Outcome& out) {
  out.seed = o.seed;
  const auto fmt = detail::parse_format(o.format);
  if (o.k && *o.k < 2) throw UsageError("--k must be at least 2");
  if (o.beta && !(*o.beta >= 0.0)) throw UsageError("--beta must be >= 0");
  if (o.lr && !(*o.lr >= 0.0)) throw UsageError("--lr must be >= 0");

  ssl::TrainConfig cfg;
  if (o.mode == "target-lid") {
    if (o.reg && *o.reg != "target")
      throw UsageError("target-lid mode trains the target regularizer only");
    if (!o.target) throw UsageError("target-lid mode requires --target");
    if (o.batch || o.tau) throw UsageError("--batch and --tau are not used in target-lid mode");
    cfg = ssl::TrainConfig::target_lid_defaults(*o.target);
  } else if (o.mode == "ssl") {
    cfg = ssl::TrainConfig::ssl_defaults();
    cfg.reg.kind = detail::parse_reg(o.reg.value_or("none"));
    if (cfg.reg.kind == RegKind::none) {
      if (o.beta && *o.beta != 0.0)
        throw UsageError("--beta " + ldreg::detail::short_num(*o.beta) + " contradicts --reg none");
      cfg.reg.beta = 0.0;
    } else {
      if (!o.beta) throw UsageError("--beta is required when a regularizer is selected");
    }
    if (cfg.reg.kind == RegKind::target_lid) {
      if (!o.target) throw UsageError("--reg target requires --target");
      cfg.reg.target_id = *o.target;
    } else if (o.target) {
      throw UsageError("--target only applies to --reg target");
    }
    if (o.batch) cfg.batch_size = *o.batch;
    if (o.tau) cfg.tau = *o.tau;
  } else {
    throw UsageError("unknown mode '" + o.mode + "'");
  }
  if (o.beta) cfg.reg.beta = *o.beta;
  if (o.k) cfg.reg.k = *o.k;
  if (o.epochs) cfg.epochs = *o.epochs;
  if (o.optimizer) {
    if (*o.optimizer == "sgd") cfg.optimizer.kind = ssl::OptimizerKind::sgd;
    else if (*o.optimizer == "adam") cfg.optimizer.kind = ssl::OptimizerKind::adam;
    else throw UsageError("unknown optimizer '" + *o.optimizer + "'");
  }
  if (o.lr) cfg.optimizer.learning_rate = *o.lr;
  if (o.estimator) {
    if (*o.estimator == "pseudocode") cfg.reg.estimator_mode = MomMode::pseudocode;
    else if (*o.estimator == "text") cfg.reg.estimator_mode = MomMode::text;
    else throw UsageError("training estimator must be pseudocode or text");
  }
  cfg.seed = o.seed;
  cfg.reg.validate();

  const bool target_mode = o.mode == "target-lid";
  const std::size_t n =
      o.n.value_or(target_mode ? detail::kTargetLidPoints : detail::kSslPoints);
  Json data{{"source", o.input.empty() ? "generated" : "file"}};
  Matrix base;
  if (!o.input.empty()) {
    if (o.n) throw UsageError("--n only applies to generated data");
    base = io::read_matrix(o.input, fmt);
    data["input"] = o.input;
  } else if (target_mode) {
    base = ssl::gen_uniform_2d(n, derive_seed(o.seed, 100));
    data.update({{"kind", "uniform2d"}, {"n", n}});
  } else {
    base = ssl::gen_subspace_gaussian(n, detail::kSslIntrinsic, detail::kSslAmbient,
                                      detail::kSslBaseNoise, derive_seed(o.seed, 100));
    data.update({{"kind", "subspace"},
                 {"n", n},
                 {"d", detail::kSslIntrinsic},
                 {"D", detail::kSslAmbient},
                 {"noise", detail::kSslBaseNoise}});
  }
  if (!target_mode) cfg.widths.front() = base.cols();

  std::vector<std::size_t> widths = cfg.widths;
  if (target_mode) widths = {base.cols(), cfg.widths.back()};
  out.config = {{"mode", o.mode},
                {"data", data},
                {"epochs", cfg.epochs},
                {"optimizer", ssl::to_string(cfg.optimizer.kind)},
                {"lr", cfg.optimizer.learning_rate},
                {"reg", to_string(cfg.reg.kind)},
                {"beta", cfg.reg.beta},
                {"k", cfg.reg.k},
                {"estimator", cfg.reg.estimator_mode == MomMode::text ? "text" : "pseudocode"},
                {"degenerate_policy",
                 cfg.reg.degenerate_policy == DegeneratePolicy::clamp ? "clamp" : "error"},
                {"detach_reference", cfg.reg.detach_reference},
                {"widths", widths},
                {"seed", o.seed},
                {"trace_out", o.trace_out}};
  if (target_mode) {
    out.config["target"] = *o.target;
    out.config["init_anisotropy"] = cfg.init_anisotropy;
    detail::fill_train_result(out, ssl::train_target_lid(base, *o.target, cfg), o.trace_out);
  } else {
    if (cfg.reg.kind == RegKind::target_lid) out.config["target"] = cfg.reg.target_id;
    out.config["batch"] = cfg.batch_size;
    out.config["tau"] = cfg.tau;
    out.config["activation"] = ssl::to_string(cfg.activation);
    out.config["view_noise"] = cfg.view_noise;
    detail::fill_train_result(out, ssl::train_ssl_toy(base, cfg), o.trace_out);
  }
}

inline Outcome execute(std::vector<std::string> args, std::ostream& info);

inline void cmd_sweep(const SweepOptions& o, Outcome& out) {
  if (o.param != "k" && o.param != "beta") throw UsageError("sweep: --param must be k or beta");
  if (o.values.empty()) throw UsageError("sweep: --values is empty");
  if (o.base.empty()) throw UsageError("sweep: no base command after '--'");
  const std::string& sub = o.base.front();
  if (sub != "train" && sub != "estimate-lid" && sub != "diagnose")
    throw UsageError("sweep: base command must be train, estimate-lid or diagnose");
  if (o.param == "beta" && sub != "train") throw UsageError("sweep: beta applies to train only");
  for (const auto& v : o.values) {
    std::size_t used = 0;
    try {
      (void)std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size()) throw UsageError("sweep: value '" + v + "' is not a number");
  }
  out.config = {{"param", o.param}, {"values", o.values}, {"base", o.base}};

  const std::string flag = "--" + o.param;
  Json rows = Json::array();
  std::ostringstream sink;
  for (const auto& v : o.values) {
    std::vector<std::string> args;
    for (std::size_t i = 0; i < o.base.size(); ++i) {
      if (o.base[i] == flag) {
        ++i;  // drop the base value
        continue;
      }
      if (o.base[i].rfind(flag + "=", 0) == 0) continue;
      args.push_back(o.base[i]);
    }
    args.push_back(flag);
    args.push_back(v);
    const Outcome r = execute(args, sink);
    Json row{{"value", v}, {"status", r.code == kOk ? "ok" : "failed"}, {"exit_code", r.code}};
    if (r.code != kOk) {
      row["error"] = r.error;
    } else if (sub == "train") {
      row["mlid"] = r.result["final_mlid"];
      row["erank"] = r.result["final_erank"];
      row["ssl_loss"] = r.result["final_ssl_loss"];
      row["reg_loss"] = r.result["final_reg_loss"];
    } else if (sub == "estimate-lid") {
      row["mlid"] = r.result["means"]["geometric"];
      row["erank"] = nullptr;
    } else {
      row["mlid"] = r.result["mlid_geometric"];
      row["erank"] = r.result["effective_rank"];
    }
    rows.push_back(row);
  }
  out.result = {{"rows", rows}};
}

// ---------------------------------------------------------------------------

namespace detail {

inline void add_format(CLI::App* app, std::string& target) {
  app->add_option("--format", target, "Matrix file format (auto-detected when omitted)")
      ->check(CLI::IsMember({"csv", "ldm1"}));
}

inline const std::vector<std::string> kEstimators{"pseudocode", "text", "mle"};

}  // namespace detail

/// Parses and runs one command without printing a report. Help and parser
/// messages go to `info`.
inline Outcome execute(std::vector<std::string> args, std::ostream& info) {
  Outcome out;
  std::vector<std::string> sweep_base;
  for (std::size_t i = 0; i < args.size(); ++i)
    if (args[i] == "--") {
      sweep_base.assign(args.begin() + static_cast<std::ptrdiff_t>(i) + 1, args.end());
      args.resize(i);
      break;
    }

  CLI::App app{"Local intrinsic dimensionality toolkit", "ldreg"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  app.footer(
      "Global options, given before the command:\n"
      "  --report PATH   write the JSON report to PATH instead of stdout\n"
      "  --no-timestamp  omit the timestamp field from the report");

  EstimateOptions est;
  auto* s_est = app.add_subcommand("estimate-lid", "Per-sample LID of a data matrix");
  s_est->add_option("--input", est.input, "Data matrix")->required();
  detail::add_format(s_est, est.format);
  s_est->add_option("--k", est.k, "Neighbourhood size")->capture_default_str();
  s_est->add_option("--estimator", est.estimator)->check(CLI::IsMember(detail::kEstimators))
      ->capture_default_str();
  s_est->add_option("--mean", est.mean)
      ->check(CLI::IsMember({"geometric", "arithmetic", "harmonic"}))
      ->capture_default_str();
  s_est->add_flag("--per-sample", est.per_sample, "Include every sample's LID");
  s_est->add_flag("--clamp", est.clamp, "Clamp degenerate neighbourhoods instead of failing");

  AfrOptions afr;
  auto* s_afr = app.add_subcommand("afr", "Asymptotic Fisher-Rao distance of two LIDs");
  s_afr->add_option("--id-a", afr.id_a)->required();
  s_afr->add_option("--id-b", afr.id_b)->required();

  FrechetOptions fre;
  auto* s_fre = app.add_subcommand("frechet", "Frechet mean and variance of LID values");
  s_fre->add_option("--input", fre.input, "File of LID values (any shape)")->required();
  detail::add_format(s_fre, fre.format);
  s_fre->add_option("--metric", fre.metric)->check(CLI::IsMember({"afr", "akl", "akl-reverse"}))
      ->capture_default_str();

  DiagnoseOptions dia;
  auto* s_dia = app.add_subcommand("diagnose", "Collapse report of a representation matrix");
  s_dia->add_option("--input", dia.input)->required();
  detail::add_format(s_dia, dia.format);
  s_dia->add_option("--k", dia.k)->capture_default_str();
  s_dia->add_option("--estimator", dia.estimator)->check(CLI::IsMember(detail::kEstimators))
      ->capture_default_str();
  s_dia->add_flag("--clamp", dia.clamp);

  GenDataOptions gen;
  auto* s_gen = app.add_subcommand("gen-data", "Write a synthetic data set");
  s_gen->add_option("--kind", gen.kind)->required()
      ->check(CLI::IsMember({"uniform2d", "subspace", "pairs"}));
  s_gen->add_option("--n", gen.n)->capture_default_str();
  s_gen->add_option("--d", gen.d, "Intrinsic dimension")->capture_default_str();
  s_gen->add_option("--D", gen.ambient, "Ambient dimension")->capture_default_str();
  s_gen->add_option("--noise", gen.noise)->capture_default_str();
  s_gen->add_option("--seed", gen.seed)->capture_default_str();
  s_gen->add_option("--output", gen.output)->required();
  s_gen->add_option("--format", gen.format)->check(CLI::IsMember({"csv", "ldm1"}))
      ->capture_default_str();

  TrainOptions tr;
  auto* s_tr = app.add_subcommand("train", "Target-LID fitting or toy contrastive training");
  s_tr->add_option("--mode", tr.mode)->required()->check(CLI::IsMember({"target-lid", "ssl"}));
  s_tr->add_option("--target", tr.target, "Target LID");
  s_tr->add_option("--reg", tr.reg)->check(CLI::IsMember({"l1", "l2", "target", "minlid", "none"}));
  s_tr->add_option("--beta", tr.beta);
  s_tr->add_option("--k", tr.k);
  s_tr->add_option("--epochs", tr.epochs);
  s_tr->add_option("--lr", tr.lr);
  s_tr->add_option("--batch", tr.batch, "Embedding rows per minibatch");
  s_tr->add_option("--tau", tr.tau);
  s_tr->add_option("--seed", tr.seed)->capture_default_str();
  s_tr->add_option("--trace-out", tr.trace_out, "Write the trace as CSV");
  s_tr->add_option("--optimizer", tr.optimizer)->check(CLI::IsMember({"sgd", "adam"}));
  s_tr->add_option("--estimator", tr.estimator)->check(CLI::IsMember({"pseudocode", "text"}));
  s_tr->add_option("--input", tr.input, "Training data (generated when omitted)");
  detail::add_format(s_tr, tr.format);
  s_tr->add_option("--n", tr.n, "Size of the generated data set");

  SweepOptions sw;
  auto* s_sw = app.add_subcommand("sweep", "Run a base command over a list of k or beta values");
  s_sw->add_option("--param", sw.param)->required()->check(CLI::IsMember({"k", "beta"}));
  s_sw->add_option("--values", sw.values)->required()->delimiter(',');
  s_sw->footer("The base command follows '--', e.g. sweep --param k --values 8,16 -- diagnose ...");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    info << app.help();
    out.code = -1;
    return out;
  } catch (const CLI::CallForAllHelp&) {
    info << app.help("", CLI::AppFormatMode::All);
    out.code = -1;
    return out;
  } catch (const CLI::CallForVersion&) {
    info << kVersion << '\n';
    out.code = -1;
    return out;
  } catch (const CLI::ParseError& e) {
    out.code = kUsage;
    out.error = detail::error_json("usage", e.what());
    return out;
  }
  if (!sweep_base.empty() && !s_sw->parsed()) {
    out.code = kUsage;
    out.error = detail::error_json("usage", "'--' is only valid for sweep");
    return out;
  }
  sw.base = sweep_base;

  try {
    for (auto* sub : app.get_subcommands()) out.command = sub->get_name();
    if (s_est->parsed()) cmd_estimate_lid(est, out);
    else if (s_afr->parsed()) cmd_afr(afr, out);
    else if (s_fre->parsed()) cmd_frechet(fre, out);
    else if (s_dia->parsed()) cmd_diagnose(dia, out);
    else if (s_gen->parsed()) cmd_gen_data(gen, out);
    else if (s_tr->parsed()) cmd_train(tr, out);
    else cmd_sweep(sw, out);
  } catch (const TrainingError& e) {
    out.code = kNumeric;
    out.error = detail::error_json("numeric", e.what());
    out.error["epoch"] = e.epoch();
    if (e.index()) out.error["sample"] = *e.index();
  } catch (const NumericError& e) {
    out.code = kNumeric;
    out.error = detail::error_json("numeric", e.what());
    if (e.index()) out.error["sample"] = *e.index();
  } catch (const DataError& e) {
    out.code = kData;
    out.error = detail::error_json("data", e.what());
  } catch (const std::invalid_argument& e) {
    out.code = kUsage;
    out.error = detail::error_json("usage", e.what());
  } catch (const std::out_of_range& e) {
    out.code = kUsage;
    out.error = detail::error_json("usage", e.what());
  } catch (const std::exception& e) {
    out.code = kData;
    out.error = detail::error_json("data", e.what());
  }
  if (out.code != kOk) out.result = Json::object();
  return out;
}

inline Json report_of(const Outcome& r, const std::vector<std::string>& args, bool timestamp) {
  Json rep;
  rep["tool"] = "ldreg";
  rep["version"] = kVersion;
  rep["command"] = r.command;
  rep["args"] = args;
  rep["seed"] = r.seed ? Json(*r.seed) : Json(nullptr);
  rep["status"] = r.code == kOk ? "ok" : "error";
  rep["exit_code"] = r.code;
  rep["config"] = r.config;
  if (r.code == kOk) rep["result"] = r.result;
  else rep["error"] = r.error;
  if (timestamp) rep["timestamp"] = detail::utc_timestamp();
  return rep;
}

/// Full front end: global options (--report PATH, --no-timestamp) precede
/// the command. The report goes to PATH or, by default, to `out`.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  std::string report_path;
  bool timestamp = true;
  std::size_t i = 0;
  for (; i < args.size(); ++i) {
    if (args[i] == "--no-timestamp") {
      timestamp = false;
    } else if (args[i] == "--report" && i + 1 < args.size()) {
      report_path = args[++i];
    } else if (args[i].rfind("--report=", 0) == 0) {
      report_path = args[i].substr(9);
    } else {
      break;
    }
  }
  std::vector<std::string> cmd(args.begin() + static_cast<std::ptrdiff_t>(i), args.end());
  const Outcome r = execute(cmd, out);
  if (r.code < 0) return kOk;  // help or version
  if (r.code != kOk) err << "ldreg: " << r.error.value("message", std::string("error")) << '\n';
  if (r.command.empty()) return r.code;  // nothing parsed, nothing to report

  const std::string text = report_of(r, cmd, timestamp).dump(2) + "\n";
  if (report_path.empty()) {
    out << text;
  } else {
    try {
      io::write_file(report_path, text);
    } catch (const DataError& e) {
      err << "ldreg: " << e.what() << '\n';
      return r.code == kOk ? kData : r.code;
    }
  }
  return r.code;
}

}  // namespace ldreg::cli
