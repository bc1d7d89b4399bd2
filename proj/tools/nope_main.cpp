#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "nope/mvu_sim.hpp"
#include "nope/nope_fixed.hpp"
#include "nope/sweep.hpp"

namespace {

using namespace nope;

std::string sibling_path(const std::string& path, const std::string& ext) {
  std::string out = path;
  if (const auto dot = out.rfind('.'); dot != std::string::npos) out.resize(dot);
  return out + ext;
}

void write_first_trial_trace(const harness::SweepConfig& cfg, const std::string& out_path) {
  if (cfg.dims.rx_antennas != 64 || cfg.dims.users != 16) {
    std::cerr << "note: --trace needs 64x16 dims; skipping trace\n";
    return;
  }
  const harness::TrialInstance inst = harness::draw_instance(cfg, 0, 0);
  const ChannelMatrix& h = inst.h;
  const fxp::QuantizedInputs qin = fxp::scale_and_quantize_inputs(h, inst.y);
  const sim::Problem problem = sim::make_problem(qin);
  sim::Trace trace;
  sim::run_solo(problem, cfg.t_max, &trace);
  std::ofstream os(out_path);
  os << trace.to_text();
  std::cout << "trace written to " << out_path << "\n";
}

int run_sweep_command(const std::string& config_path, harness::SweepConfig cfg,
                      const std::vector<std::pair<std::string, std::string>>& overrides,
                      const std::string& out_path, bool trace, int threads) {
  try {
    if (!config_path.empty()) cfg = harness::parse_config_file(config_path);
    for (const auto& [key, value] : overrides) harness::apply_override(cfg, key, value);
    harness::validate(cfg);

    const auto points = harness::run_sweep(cfg, threads);
    harness::write_csv(points, out_path);
    const std::string plot = harness::emit_plot_script(out_path);
    std::cout << "wrote " << points.size() << " points to " << out_path << " (plot script "
              << plot << ")\n";
    for (const auto& p : points)
      std::printf("%-12s %7.2f dB  trials=%-8ld errors=%-7ld ber=%.3e\n",
                  std::string(harness::to_string(p.equalizer)).c_str(), p.snr_db, p.trials,
                  p.bit_errors, p.ber);
    if (trace) write_first_trial_trace(cfg, sibling_path(out_path, ".trace"));
    return 0;
  } catch (const harness::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int run_golden_command(harness::SweepConfig cfg, const std::string& out_path) {
  try {
    harness::validate(cfg);
    const harness::TrialInstance inst = harness::draw_instance(cfg, 0, 0);
    const ChannelMatrix& h = inst.h;
    const auto records = fxp::golden_records(h, inst.y, cfg.t_max);
    std::ofstream os(out_path);
    if (!os) throw std::runtime_error("cannot open " + out_path);
    fxp::write_golden(os, records);
    std::cout << "wrote " << records.size() << " golden records to " << out_path << "\n";
    return 0;
  } catch (const harness::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nonparametric equalizer harness"};
  app.require_subcommand(1);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run a Monte Carlo BER sweep");
  std::string config_path, out_path = "results.csv";
  std::string snr_db, constellation, equalizers, dims, gain_model, t_max, max_trials,
      min_bit_errors, seed;
  bool trace = false;
  int threads = 0;
  sweep->add_option("--config", config_path, "key = value config file");
  sweep->add_option("--snr-db", snr_db, "comma list of SNR points (dB), inf allowed");
  sweep->add_option("--constellation", constellation, "bpsk|qpsk|qam16|qam64|qam256");
  sweep->add_option("--equalizers", equalizers,
                    "comma list of lmmse-exact,lmmse-real,lmmse-amp,nope-float,nope-fixed");
  sweep->add_option("--seed", seed, "64-bit Monte Carlo seed");
  sweep->add_option("--out", out_path, "output CSV path");
  sweep->add_option("--dims", dims, "system dimensions, e.g. 64x16");
  sweep->add_option("--t-max", t_max, "equalizer iteration count");
  sweep->add_option("--max-trials", max_trials, "per-point trial cap");
  sweep->add_option("--min-bit-errors", min_bit_errors, "per-point stop threshold");
  sweep->add_option("--gain-model", gain_model, "uniform | loguniform:<lo>:<hi> | g1,g2,...");
  sweep->add_flag("--trace", trace, "emit the cycle trace of the first trial");
  sweep->add_option("--threads", threads, "worker threads (0 = hardware)");

  // golden
  auto* golden = app.add_subcommand("golden", "dump fixed-point golden vectors for one trial");
  std::string g_out = "golden.txt", g_seed, g_snr, g_constellation, g_dims, g_tmax;
  golden->add_option("--seed", g_seed, "64-bit seed");
  golden->add_option("--snr-db", g_snr, "SNR of the recorded trial (dB)");
  golden->add_option("--constellation", g_constellation, "alphabet of the recorded trial");
  golden->add_option("--dims", g_dims, "system dimensions");
  golden->add_option("--t-max", g_tmax, "iteration count");
  golden->add_option("--out", g_out, "output path");

  CLI11_PARSE(app, argc, argv);

  if (sweep->parsed()) {
    std::vector<std::pair<std::string, std::string>> overrides;
    auto push = [&overrides](const char* key, const std::string& value) {
      if (!value.empty()) overrides.emplace_back(key, value);
    };
    push("dims", dims);
    push("constellation", constellation);
    push("equalizers", equalizers);
    push("snr_db", snr_db);
    push("t_max", t_max);
    push("min_bit_errors", min_bit_errors);
    push("max_trials", max_trials);
    push("seed", seed);
    push("gain_model", gain_model);
    return run_sweep_command(config_path, {}, overrides, out_path, trace, threads);
  }

  harness::SweepConfig cfg;
  cfg.equalizers = {harness::Equalizer::NopeFixed};
  cfg.snr_db = {10.0};
  try {
    if (!g_dims.empty()) harness::apply_override(cfg, "dims", g_dims);
    if (!g_constellation.empty()) harness::apply_override(cfg, "constellation", g_constellation);
    if (!g_snr.empty()) harness::apply_override(cfg, "snr_db", g_snr);
    if (!g_seed.empty()) harness::apply_override(cfg, "seed", g_seed);
    if (!g_tmax.empty()) harness::apply_override(cfg, "t_max", g_tmax);
  } catch (const harness::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  return run_golden_command(cfg, g_out);
}
