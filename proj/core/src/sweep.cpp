#include "nope/sweep.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "nope/amp.hpp"
#include "nope/lmmse.hpp"
#include "nope/nope.hpp"
#include "nope/nope_fixed.hpp"

namespace nope::harness {

std::string_view to_string(Equalizer e) {
  switch (e) {
    case Equalizer::LmmseExact: return "lmmse-exact";
    case Equalizer::LmmseReal: return "lmmse-real";
    case Equalizer::LmmseAmp: return "lmmse-amp";
    case Equalizer::NopeFloat: return "nope-float";
    case Equalizer::NopeFixed: return "nope-fixed";
  }
  return "?";
}

Equalizer equalizer_from_string(std::string_view token) {
  if (token == "lmmse-exact") return Equalizer::LmmseExact;
  if (token == "lmmse-real") return Equalizer::LmmseReal;
  if (token == "lmmse-amp") return Equalizer::LmmseAmp;
  if (token == "nope-float") return Equalizer::NopeFloat;
  if (token == "nope-fixed") return Equalizer::NopeFixed;
  throw ConfigError("unknown equalizer: " + std::string(token));
}

void validate(const SweepConfig& cfg) {
  if (cfg.snr_db.empty()) throw ConfigError("snr_db must be nonempty");
  if (cfg.equalizers.empty()) throw ConfigError("equalizers must be nonempty");
  if (cfg.t_max < 1) throw ConfigError("t_max must be >= 1");
  if (cfg.min_bit_errors < 100) throw ConfigError("min_bit_errors must be >= 100");
  if (cfg.max_trials < 1) throw ConfigError("max_trials must be >= 1");
  if (cfg.gain_model.kind == GainModel::Kind::Explicit) {
    if (cfg.gain_model.gains.size() != cfg.dims.users)
      throw ConfigError("gain_model: explicit gains must have U entries");
    if ((cfg.gain_model.gains.array() < 0.0).any())
      throw ConfigError("gain_model: negative gain");
  }
  if (cfg.gain_model.kind == GainModel::Kind::LogUniformDb &&
      cfg.gain_model.lo_db > cfg.gain_model.hi_db)
    throw ConfigError("gain_model: lo_db must be <= hi_db");
}

namespace {

constexpr long kBatch = 256;  // fixed stop-check granularity, thread-independent

std::uint64_t trial_stream(int snr_index, long trial) {
  return (std::uint64_t(std::uint32_t(snr_index)) << 40) | std::uint64_t(trial);
}

TrialInstance make_instance(const SweepConfig& cfg, const Constellation& con, int snr_index,
                            long trial, double snr_db) {
  Philox rng(cfg.seed, trial_stream(snr_index, trial));
  const SystemDims& d = cfg.dims;

  VecR gains;
  double gain_energy = double(d.users);
  switch (cfg.gain_model.kind) {
    case GainModel::Kind::Uniform:
      break;
    case GainModel::Kind::Explicit:
      gains = cfg.gain_model.gains;
      gain_energy = gains.array().square().sum();
      break;
    case GainModel::Kind::LogUniformDb: {
      gains.resize(d.users);
      for (int u = 0; u < d.users; ++u) {
        const double db = cfg.gain_model.lo_db +
                          (cfg.gain_model.hi_db - cfg.gain_model.lo_db) * rng.uniform();
        gains[u] = std::pow(10.0, db / 20.0);  // dB of power gain
      }
      gain_energy = gains.array().square().sum();
      break;
    }
  }

  TrialInstance inst{gains.size() ? generate_channel(d, gains, rng) : generate_channel(d, rng),
                     VecC{}, {}, 0.0, gain_energy};

  inst.tx.resize(size_t(d.users));
  VecC x(d.users);
  const int count = int(con.points.size());
  for (int u = 0; u < d.users; ++u) {
    int idx = int(rng.uniform() * count);
    if (idx >= count) idx = count - 1;
    x[u] = con.points[size_t(idx)];
    inst.tx[size_t(u)] = con.bits_of_symbol[size_t(idx)];
  }

  if (std::isinf(snr_db)) {
    inst.n0 = 0.0;
    inst.y = transmit(inst.h, x, NoiseSpec::disabled(), rng);
  } else {
    inst.n0 = inst.gain_energy / (d.rx_antennas * std::pow(10.0, snr_db / 10.0));
    inst.y = transmit(inst.h, x, NoiseSpec(inst.n0), rng);
  }
  return inst;
}

long bit_errors_for(Equalizer eq, const SweepConfig& cfg, const Constellation& con,
                    const TrialInstance& inst) {
  const ChannelMatrix& h = inst.h;
  VecC zhat;
  switch (eq) {
    case Equalizer::LmmseExact:
      zhat = lmmse_equalize(h, inst.y, inst.n0).xhat;  // rho = N0 / Ex, Ex = 1
      break;
    case Equalizer::LmmseReal: {
      const VecR xr = lmmse_equalize_real(h, inst.y, inst.n0 / 2.0);
      zhat.resize(xr.size());
      for (int u = 0; u < xr.size(); ++u) zhat[u] = {xr[u], 0.0};
      break;
    }
    case Equalizer::LmmseAmp:
      zhat = lmmse_amp_run(h, inst.y, 1.0, cfg.t_max).z;
      break;
    case Equalizer::NopeFloat:
      zhat = nope_run(h, inst.y, cfg.t_max).z;
      break;
    case Equalizer::NopeFixed:
      zhat = fxp::nope_run_fixed(h, inst.y, cfg.t_max).state.z;
      break;
  }
  const HardDecisions dec = demap_hard(zhat, con);
  long errors = 0;
  for (size_t u = 0; u < inst.tx.size(); ++u)
    errors += std::popcount(dec.patterns[u] ^ inst.tx[u]);
  return errors;
}

}  // namespace

TrialInstance draw_instance(const SweepConfig& cfg, int snr_index, long trial) {
  if (snr_index < 0 || snr_index >= int(cfg.snr_db.size()))
    throw std::invalid_argument("draw_instance: snr_index out of range");
  std::vector<double> snrs = cfg.snr_db;
  std::sort(snrs.begin(), snrs.end());
  const Constellation con = make_constellation(cfg.constellation);
  return make_instance(cfg, con, snr_index, trial, snrs[size_t(snr_index)]);
}

std::vector<BerPoint> run_sweep(const SweepConfig& cfg, int threads) {
  validate(cfg);
  if (threads <= 0) threads = int(std::max(1u, std::thread::hardware_concurrency()));
  const Constellation con = make_constellation(cfg.constellation);

  std::vector<double> snrs = cfg.snr_db;
  std::sort(snrs.begin(), snrs.end());

  const size_t eq_count = cfg.equalizers.size();
  std::vector<BerPoint> out;

  for (int si = 0; si < int(snrs.size()); ++si) {
    const double snr = snrs[size_t(si)];
    std::vector<long> errors(eq_count, 0), stop_trials(eq_count, 0);
    std::vector<bool> active(eq_count, true);
    long consumed = 0;

    while (consumed < cfg.max_trials &&
           std::any_of(active.begin(), active.end(), [](bool a) { return a; })) {
      const long batch = std::min(kBatch, cfg.max_trials - consumed);
      std::vector<std::vector<long>> partial(size_t(threads), std::vector<long>(eq_count, 0));

      auto worker = [&](int w) {
        for (long i = consumed + w; i < consumed + batch; i += threads) {
          const TrialInstance inst = make_instance(cfg, con, si, i, snr);
          for (size_t e = 0; e < eq_count; ++e)
            if (active[e])
              partial[size_t(w)][e] += bit_errors_for(cfg.equalizers[e], cfg, con, inst);
        }
      };
      if (threads == 1) {
        worker(0);
      } else {
        std::vector<std::thread> pool;
        pool.reserve(size_t(threads));
        for (int w = 0; w < threads; ++w) pool.emplace_back(worker, w);
        for (auto& th : pool) th.join();
      }

      consumed += batch;
      for (size_t e = 0; e < eq_count; ++e) {
        if (!active[e]) continue;
        for (int w = 0; w < threads; ++w) errors[e] += partial[size_t(w)][e];
        if (errors[e] >= cfg.min_bit_errors || consumed >= cfg.max_trials) {
          active[e] = false;
          stop_trials[e] = consumed;
        }
      }
    }

    const double bits_per_trial = double(cfg.dims.users) * con.bits_per_symbol;
    for (size_t e = 0; e < eq_count; ++e) {
      BerPoint p;
      p.equalizer = cfg.equalizers[e];
      p.snr_db = snr;
      p.trials = stop_trials[e];
      p.bit_errors = errors[e];
      p.ber = p.trials > 0 ? double(p.bit_errors) / (double(p.trials) * bits_per_trial) : 0.0;
      out.push_back(p);
    }
  }

  std::stable_sort(out.begin(), out.end(), [](const BerPoint& a, const BerPoint& b) {
    if (a.equalizer != b.equalizer) return int(a.equalizer) < int(b.equalizer);
    return a.snr_db < b.snr_db;
  });
  return out;
}

void write_csv(const std::vector<BerPoint>& points, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_csv: cannot open " + path);
  os << "equalizer,snr_db,trials,bit_errors,ber\n";
  char buf[64];
  for (const auto& p : points) {
    os << to_string(p.equalizer) << ',';
    std::snprintf(buf, sizeof buf, "%.8g", p.snr_db);
    os << buf << ',' << p.trials << ',' << p.bit_errors << ',';
    std::snprintf(buf, sizeof buf, "%.8g", p.ber);
    os << buf << '\n';
  }
  if (!os) throw std::runtime_error("write_csv: write failure on " + path);
}

std::vector<BerPoint> read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_csv: cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("read_csv: empty file");
  std::vector<BerPoint> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    BerPoint p;
    std::getline(ls, field, ',');
    p.equalizer = equalizer_from_string(field);
    std::getline(ls, field, ',');
    p.snr_db = std::stod(field);
    std::getline(ls, field, ',');
    p.trials = std::stol(field);
    std::getline(ls, field, ',');
    p.bit_errors = std::stol(field);
    std::getline(ls, field, ',');
    p.ber = std::stod(field);
    out.push_back(p);
  }
  return out;
}

std::string emit_plot_script(const std::string& csv_path) {
  std::ifstream is(csv_path);
  if (!is) throw std::runtime_error("emit_plot_script: cannot open " + csv_path);
  std::string header;
  if (!std::getline(is, header)) throw std::runtime_error("emit_plot_script: empty csv");

  // Column numbers come from the header actually present in the file.
  std::vector<std::string> cols;
  {
    std::istringstream hs(header);
    std::string c;
    while (std::getline(hs, c, ',')) cols.push_back(c);
  }
  auto col_of = [&cols, &csv_path](const std::string& name) {
    for (size_t i = 0; i < cols.size(); ++i)
      if (cols[i] == name) return int(i) + 1;  // gnuplot columns are 1-based
    throw std::runtime_error("emit_plot_script: column " + name + " missing in " + csv_path);
  };
  const int c_eq = col_of("equalizer");
  const int c_snr = col_of("snr_db");
  const int c_ber = col_of("ber");

  std::vector<std::string> series;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const std::string name = line.substr(0, line.find(','));
    if (std::find(series.begin(), series.end(), name) == series.end()) series.push_back(name);
  }

  std::string out_path = csv_path;
  if (const auto dot = out_path.rfind('.'); dot != std::string::npos)
    out_path.resize(dot);
  out_path += ".gp";

  std::ofstream os(out_path);
  if (!os) throw std::runtime_error("emit_plot_script: cannot open " + out_path);
  os << "# generated from " << csv_path << "\n"
     << "set datafile separator \",\"\n"
     << "set logscale y\n"
     << "set grid\n"
     << "set xlabel \"average receive SNR per antenna [dB]\"\n"
     << "set ylabel \"uncoded BER\"\n"
     << "set key bottom left\n";
  if (series.empty()) {
    os << "# no data series\n";
  } else {
    os << "plot \\\n";
    for (size_t i = 0; i < series.size(); ++i) {
      os << "  \"" << csv_path << "\" skip 1 using (strcol(" << c_eq << ") eq \"" << series[i]
         << "\" ? column(" << c_snr << ") : NaN):(column(" << c_ber
         << ")) with linespoints title \"" << series[i] << "\"";
      os << (i + 1 < series.size() ? ", \\\n" : "\n");
    }
  }
  if (!os) throw std::runtime_error("emit_plot_script: write failure on " + out_path);
  return out_path;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, sep)) out.push_back(tok);
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_snr(const std::string& tok) {
  if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
  return std::stod(tok);
}

}  // namespace

void apply_override(SweepConfig& cfg, const std::string& key, const std::string& value) {
  try {
    if (key == "dims") {
      const auto x = value.find('x');
      if (x == std::string::npos) throw ConfigError("dims must look like 64x16");
      cfg.dims = SystemDims(std::stoi(value.substr(0, x)), std::stoi(value.substr(x + 1)));
    } else if (key == "constellation") {
      cfg.constellation = constellation_from_string(value);
    } else if (key == "equalizers") {
      cfg.equalizers.clear();
      for (const auto& tok : split(value, ','))
        cfg.equalizers.push_back(equalizer_from_string(trim(tok)));
    } else if (key == "snr_db") {
      cfg.snr_db.clear();
      for (const auto& tok : split(value, ',')) cfg.snr_db.push_back(parse_snr(trim(tok)));
    } else if (key == "t_max") {
      cfg.t_max = std::stoi(value);
    } else if (key == "min_bit_errors") {
      cfg.min_bit_errors = std::stoi(value);
    } else if (key == "max_trials") {
      cfg.max_trials = std::stol(value);
    } else if (key == "seed") {
      cfg.seed = std::stoull(value);
    } else if (key == "gain_model") {
      if (value == "uniform") {
        cfg.gain_model = GainModel{};
      } else if (value.rfind("loguniform:", 0) == 0) {
        const auto parts = split(value.substr(11), ':');
        if (parts.size() != 2) throw ConfigError("gain_model: loguniform:<lo_db>:<hi_db>");
        cfg.gain_model.kind = GainModel::Kind::LogUniformDb;
        cfg.gain_model.lo_db = std::stod(parts[0]);
        cfg.gain_model.hi_db = std::stod(parts[1]);
      } else {
        const auto toks = split(value, ',');
        cfg.gain_model.kind = GainModel::Kind::Explicit;
        cfg.gain_model.gains.resize(Eigen::Index(toks.size()));
        for (size_t i = 0; i < toks.size(); ++i)
          cfg.gain_model.gains[Eigen::Index(i)] = std::stod(trim(toks[i]));
      }
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("bad value for " + key + ": " + value + " (" + e.what() + ")");
  }
}

SweepConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  SweepConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    apply_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

double snr_at_ber(const std::vector<BerPoint>& points, Equalizer eq, double target_ber) {
  std::vector<BerPoint> curve;
  for (const auto& p : points)
    if (p.equalizer == eq) curve.push_back(p);
  std::sort(curve.begin(), curve.end(),
            [](const BerPoint& a, const BerPoint& b) { return a.snr_db < b.snr_db; });
  for (size_t i = 0; i + 1 < curve.size(); ++i) {
    const double b0 = curve[i].ber, b1 = curve[i + 1].ber;
    if (b0 >= target_ber && target_ber >= b1 && b1 > 0.0) {
      if (b0 == b1) return curve[i].snr_db;
      const double f = (std::log10(b0) - std::log10(target_ber)) /
                       (std::log10(b0) - std::log10(b1));
      return curve[i].snr_db + f * (curve[i + 1].snr_db - curve[i].snr_db);
    }
  }
  throw std::runtime_error("snr_at_ber: curve for " + std::string(to_string(eq)) +
                           " does not bracket target BER");
}

}  // namespace nope::harness
