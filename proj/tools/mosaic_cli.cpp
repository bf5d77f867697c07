// mosaic: data-mixture selection CLI.
//
// Subcommands: ingest, cluster, rank, fit, select, simulate, report.
// Parameters come from --config (JSON) overlaid by explicit flags; flags
// win. Outputs land in --out (default: current directory) together with a
// run record holding the resolved parameters.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mosaic/cli.hpp"
#include "mosaic/io.hpp"

namespace {

struct GlobalFlags {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::int64_t> seed;
};

// Config file first, explicit flag values over it.
mosaic::cli::Invocation resolve(const GlobalFlags& flags, const nlohmann::json& flag_params) {
  mosaic::cli::Invocation inv;
  if (!flags.config_path.empty()) inv.params = mosaic::io::read_json(flags.config_path);
  if (!inv.params.is_object()) inv.params = nlohmann::json::object();
  for (const auto& [key, value] : flag_params.items()) inv.params[key] = value;
  if (flags.seed) inv.params["seed"] = *flags.seed;
  inv.out_dir = flags.out_dir;
  return inv;
}

void add_global_flags(CLI::App* cmd, GlobalFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file with command parameters");
  cmd->add_option("--seed", flags.seed, "Seed override");
  cmd->add_option("--out", flags.out_dir, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-mixture selection toolkit"};
  app.require_subcommand(1);

  GlobalFlags flags;
  nlohmann::json params = nlohmann::json::object();
  int (*command)(const mosaic::cli::Invocation&) = nullptr;

  auto bind_str = [&params](CLI::App* cmd, const std::string& flag, const std::string& key,
                            const std::string& help) {
    cmd->add_option_function<std::string>(
        flag, [&params, key](const std::string& v) { params[key] = v; }, help);
  };
  auto bind_int = [&params](CLI::App* cmd, const std::string& flag, const std::string& key,
                            const std::string& help) {
    cmd->add_option_function<std::int64_t>(
        flag, [&params, key](std::int64_t v) { params[key] = v; }, help);
  };
  auto bind_real = [&params](CLI::App* cmd, const std::string& flag, const std::string& key,
                             const std::string& help) {
    cmd->add_option_function<double>(
        flag, [&params, key](double v) { params[key] = v; }, help);
  };
  auto bind_flag = [&params](CLI::App* cmd, const std::string& flag, const std::string& key,
                             const std::string& help) {
    cmd->add_flag_function(
        flag, [&params, key](std::int64_t count) { params[key] = count > 0; }, help);
  };

  auto* ingest = app.add_subcommand("ingest", "Validate a pool manifest; segment session logs");
  add_global_flags(ingest, flags);
  bind_str(ingest, "--manifest", "manifest", "Pool manifest (one record per line)");
  bind_str(ingest, "--subscores", "subscores", "Per-sample subscore CSV to merge");
  bind_flag(ingest, "--percent", "percent", "Subscore values are percentages (divide by 100)");
  bind_str(ingest, "--sessions", "sessions", "Session CSV: session_id,frame_count,frame_rate_hz");
  bind_real(ingest, "--clip-seconds", "clip_seconds", "Virtual clip length in seconds");
  ingest->callback([&] { command = mosaic::cli::cmd_ingest; });

  auto* cluster = app.add_subcommand("cluster", "Partition the pool into domains");
  add_global_flags(cluster, flags);
  bind_str(cluster, "--manifest", "manifest", "Pool manifest");
  bind_str(cluster, "--by", "by", "Source: metadata, kmeans, or tfidf");
  bind_int(cluster, "-M,--clusters", "M", "Number of clusters");
  bind_int(cluster, "--vocab", "vocab_size", "TF-IDF vocabulary size");
  bind_str(cluster, "--stop-words", "stop_words", "Stop-word list (one word per line)");
  bind_int(cluster, "--max-iters", "max_iters", "Maximum Lloyd iterations");
  cluster->callback([&] { command = mosaic::cli::cmd_cluster; });

  auto* rank = app.add_subcommand("rank", "Order samples within each cluster by importance");
  add_global_flags(rank, flags);
  bind_str(rank, "--manifest", "manifest", "Pool manifest");
  bind_str(rank, "--assignments", "assignments", "Cluster assignment CSV (id,cluster_id)");
  bind_str(rank, "--direction", "direction", "ascending (default) or descending");
  rank->callback([&] { command = mosaic::cli::cmd_rank; });

  auto* fit = app.add_subcommand("fit", "Fit per-cluster saturating gain curves from pilots");
  add_global_flags(fit, flags);
  bind_str(fit, "--pilots", "pilots", "Pilot CSV: cluster_id,n_added,delta_u");
  bind_real(fit, "--tau-min", "tau_min", "Lower bound of the tau search");
  bind_real(fit, "--tau-max", "tau_max", "Upper bound of the tau search");
  bind_int(fit, "--grid-points", "grid_points", "Log-grid seeds before refinement");
  fit->callback([&] { command = mosaic::cli::cmd_fit; });

  auto* select = app.add_subcommand("select", "Select a sample budget with one strategy");
  add_global_flags(select, flags);
  bind_str(select, "--method", "method", "mosaic, random, entropy, coreset, or chameleon");
  bind_int(select, "-B,--budget", "budget", "Number of samples to select");
  bind_str(select, "--ranked", "ranked", "Ranked CSV (mosaic)");
  bind_str(select, "--fits", "fits", "Fits CSV (mosaic)");
  bind_str(select, "--manifest", "manifest", "Pool manifest (random, coreset, chameleon)");
  bind_str(select, "--train-manifest", "train_manifest", "Train-set manifest (coreset)");
  bind_str(select, "--logits", "logits", "Logit CSV (entropy)");
  bind_str(select, "--assignments", "assignments", "Cluster assignment CSV (chameleon)");
  bind_real(select, "--lambda", "lambda", "Ridge parameter (chameleon)");
  select->callback([&] { command = mosaic::cli::cmd_select; });

  auto* simulate = app.add_subcommand("simulate", "Run a synthetic-pool experiment");
  add_global_flags(simulate, flags);
  simulate->callback([&] { command = mosaic::cli::cmd_simulate; });

  auto* report = app.add_subcommand("report", "Aggregate curves into mean/std and BRMR tables");
  add_global_flags(report, flags);
  bind_str(report, "--curves", "curves", "Per-seed curve CSV from simulate");
  report->callback([&] { command = mosaic::cli::cmd_report; });

  CLI11_PARSE(app, argc, argv);

  try {
    return command(resolve(flags, params));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
