#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nope/constellation.hpp"
#include "nope/model.hpp"

namespace nope::harness {

enum class Equalizer { LmmseExact, LmmseReal, LmmseAmp, NopeFloat, NopeFixed };

std::string_view to_string(Equalizer e);
Equalizer equalizer_from_string(std::string_view token);

/// Per-user large-scale gain model for channel draws. Log-uniform draws are
/// in dB of power gain, redrawn every trial.
struct GainModel {
  enum class Kind { Uniform, Explicit, LogUniformDb };
  Kind kind = Kind::Uniform;
  VecR gains;  // amplitude gains, Explicit only
  double lo_db = 0.0, hi_db = 0.0;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sweep description. The SNR convention is average receive SNR per antenna:
/// E||Hx||^2 / (B N0), so N0 = Ex sum_u d_u^2 / (B snr) with Ex = 1. An SNR
/// of +inf disables noise.
struct SweepConfig {
  SystemDims dims{64, 16};
  ConstellationName constellation = ConstellationName::QAM16;
  std::vector<Equalizer> equalizers;
  std::vector<double> snr_db;
  int t_max = 5;
  int min_bit_errors = 500;
  long max_trials = 100000;
  std::uint64_t seed = 1;
  GainModel gain_model;
};

void validate(const SweepConfig& cfg);

struct BerPoint {
  Equalizer equalizer = Equalizer::LmmseExact;
  double snr_db = 0.0;
  long trials = 0;
  long bit_errors = 0;
  double ber = 0.0;  // bit_errors / (trials * U * bits_per_symbol)
};

/// One Monte Carlo realization: channel, transmitted bits, receive vector.
struct TrialInstance {
  ChannelMatrix h;
  VecC y;
  std::vector<std::uint32_t> tx;  // transmitted bit patterns, one per user
  double n0 = 0.0;
  double gain_energy = 0.0;  // sum_u d_u^2 of the drawn gains
};

/// The realization used for (snr point, trial). snr_index refers to the
/// ascending-sorted snr_db list. Deterministic in (config.seed, snr_index,
/// trial) and independent of the equalizer under test.
TrialInstance draw_instance(const SweepConfig& cfg, int snr_index, long trial);

/// Runs the sweep. Every (snr, trial) pair names one channel/signal/noise
/// realization shared by all equalizers, keyed by a counter-based stream, so
/// results are a pure function of (config, seed) regardless of the thread
/// count. A point stops once min_bit_errors is reached (checked on fixed
/// batch boundaries) or max_trials is exhausted.
std::vector<BerPoint> run_sweep(const SweepConfig& cfg, int threads = 0);

/// CSV schema: header `equalizer,snr_db,trials,bit_errors,ber`, floats with
/// 8 significant digits, rows ordered by (equalizer, snr ascending).
void write_csv(const std::vector<BerPoint>& points, const std::string& path);
std::vector<BerPoint> read_csv(const std::string& path);

/// Writes a gnuplot script next to the CSV (extension .gp): log-scale BER
/// axis, one series per equalizer found in the file. Returns the script
/// path.
std::string emit_plot_script(const std::string& csv_path);

/// Flat key = value file; keys mirror SweepConfig fields:
///   dims, constellation, equalizers, snr_db, t_max, min_bit_errors,
///   max_trials, seed, gain_model.
SweepConfig parse_config_file(const std::string& path);
void apply_override(SweepConfig& cfg, const std::string& key, const std::string& value);

/// SNR at which an equalizer's curve crosses target_ber, by log-linear
/// interpolation between the bracketing sweep points. Throws when the curve
/// does not bracket the target.
double snr_at_ber(const std::vector<BerPoint>& points, Equalizer eq, double target_ber);

}  // namespace nope::harness
