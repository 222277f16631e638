#include "modest/cli.hpp"

#include "modest/detection.hpp"
#include "modest/exponents.hpp"
#include "modest/jscc.hpp"
#include "modest/numerics.hpp"
#include "modest/simulator.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string_view>

namespace modest {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);  // round-trip exact
  return buf;
}

std::string emit_csv(const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream os;
  for (std::size_t i = 0; i < header.size(); ++i)
    os << (i ? "," : "") << header[i];
  os << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw NumericsError("emit_csv: row does not match the schema");
    for (std::size_t i = 0; i < row.size(); ++i)
      os << (i ? "," : "") << row[i];
    os << '\n';
  }
  return os.str();
}

namespace {

using nlohmann::json;

std::string fmt_double(double v) { return format_double(v); }

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Every parameter that affected the result, echoed with the run.  Worker
// count is deliberately absent: results are independent of it.
struct Manifest {
  std::string command;
  std::map<std::string, std::string> params;

  void set(const std::string& k, double v) { params[k] = fmt_double(v); }
  void set(const std::string& k, std::uint64_t v) { params[k] = std::to_string(v); }
  void set(const std::string& k, int v) { params[k] = std::to_string(v); }
  void set(const std::string& k, const std::string& v) { params[k] = v; }

  std::string line(const std::string& checksum) const {
    std::ostringstream os;
    os << "manifest command=" << command;
    for (const auto& [k, v] : params) os << ' ' << k << '=' << v;
    os << " version=" << kToolVersion << " checksum=" << checksum;
    return os.str();
  }
  json to_json(const std::string& checksum) const {
    json j{{"command", command},
           {"version", kToolVersion},
           {"checksum", checksum}};
    json p = json::object();
    for (const auto& [k, v] : params) p[k] = v;
    j["params"] = p;
    return j;
  }
};

// A run result: either a single value (plus named extras for JSON mode) or
// a table of rows under a column header.
struct Output {
  bool scalar = false;
  json scalar_obj;  // must contain "value"
  std::vector<std::string> header;
  std::vector<std::vector<json>> rows;

  static Output value(json v, json extras = json::object()) {
    Output o;
    o.scalar = true;
    o.scalar_obj = std::move(extras);
    o.scalar_obj["value"] = std::move(v);
    return o;
  }
  static Output table(std::vector<std::string> header) {
    Output o;
    o.header = std::move(header);
    return o;
  }
};

std::string csv_cell(const json& v) {
  if (v.is_number_float()) return fmt_double(v.get<double>());
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.get<std::string>();
}

struct EmitOpts {
  bool json_mode = false;
  std::string out_path;

  void add(CLI::App* sub) {
    sub->add_flag("--json", json_mode, "emit JSON instead of CSV");
    sub->add_option("--out", out_path, "write the payload to this file");
  }
};

void emit(const Output& o, const EmitOpts& eo, const Manifest& m,
          std::ostream& out, std::ostream& err) {
  std::string payload;
  std::string checksum;
  if (!eo.json_mode) {
    if (o.scalar) {
      payload = csv_cell(o.scalar_obj.at("value")) + "\n";
    } else {
      std::vector<std::vector<std::string>> cells;
      cells.reserve(o.rows.size());
      for (const auto& row : o.rows) {
        std::vector<std::string> r;
        r.reserve(row.size());
        for (const json& v : row) r.push_back(csv_cell(v));
        cells.push_back(std::move(r));
      }
      payload = emit_csv(o.header, cells);
    }
    checksum = hex16(fnv1a64(payload));
  } else {
    json body;
    if (o.scalar) {
      body = o.scalar_obj;
    } else {
      json rows = json::array();
      for (const auto& row : o.rows) {
        json obj = json::object();
        for (std::size_t i = 0; i < row.size(); ++i) obj[o.header[i]] = row[i];
        rows.push_back(std::move(obj));
      }
      body = json{{"rows", std::move(rows)}};
    }
    checksum = hex16(fnv1a64(body.dump()));
    body["manifest"] = m.to_json(checksum);
    payload = body.dump(2) + "\n";
  }
  err << m.line(checksum) << '\n';
  if (eo.out_path.empty()) {
    out << payload;
  } else {
    std::ofstream f(eo.out_path, std::ios::binary);
    if (!f) throw NumericsError("cannot open output file " + eo.out_path);
    f << payload;
  }
}

// Channel inputs come as capacity or as (power, noise density); the manifest
// records whichever was given.  The value storage may be shared between
// subcommands (only the parsed one writes it), but the option handles used
// for count() checks must belong to the parsed subcommand, so add() hands
// them back for the callback to capture.
struct ChannelHandles {
  CLI::Option* cap = nullptr;
  CLI::Option* pow = nullptr;
  CLI::Option* noise = nullptr;
};

struct ChannelOpts {
  double capacity = 0.0;
  double power = 0.0;
  double noise = 0.0;

  ChannelHandles add(CLI::App* sub) {
    ChannelHandles h;
    h.cap = sub->add_option("--capacity", capacity, "capacity C = S/N0, nats/s")
                ->check(CLI::PositiveNumber);
    h.pow = sub->add_option("--power", power, "signal power S, watts")
                ->check(CLI::PositiveNumber);
    h.noise = sub->add_option("--noise-density", noise,
                              "two-sided noise density N0, watts/Hz")
                  ->check(CLI::PositiveNumber);
    return h;
  }
  ChannelSpec resolve(const ChannelHandles& h, Manifest& m) const {
    if (h.cap->count()) {
      if (h.pow->count() || h.noise->count())
        throw CLI::ValidationError(
            "channel", "give --capacity or --power/--noise-density, not both");
      m.set("capacity", capacity);
      return ChannelSpec::from_capacity(capacity);
    }
    if (h.pow->count() && h.noise->count()) {
      m.set("power", power);
      m.set("noise_density", noise);
      return {power, noise};
    }
    throw CLI::RequiredError("--capacity or (--power and --noise-density)");
  }
};

std::vector<double> load_profile_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::domain_error("profile file: cannot open " + path);
  std::vector<double> samples;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double v;
    while (ls >> v) samples.push_back(v);
    if (!ls.eof()) {
      std::string stray;
      std::istringstream(line) >> stray;
      if (!stray.empty())
        throw std::domain_error("profile file: bad sample on line " +
                                std::to_string(lineno));
    }
  }
  if (samples.empty()) throw std::domain_error("profile file: no samples");
  return samples;
}

std::vector<json> tail_row(const TailEstimate& te) {
  return {te.excess_count, te.trials, te.p_hat, te.ci.lo, te.ci.hi};
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Flat key=value config: each key becomes --key=value unless that flag is
// already on the command line, so explicit flags override the file.
std::vector<std::string> apply_config_file(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + i);
      break;
    }
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw CLI::FileError("config file: cannot open " + path);
  std::string line;
  int lineno = 0;
  std::vector<std::string> extra;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CLI::FileError("config file: expected key=value on line " +
                           std::to_string(lineno));
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw CLI::FileError("config file: empty key on line " +
                           std::to_string(lineno));
    std::string flag = "--" + key;
    bool present = false;
    for (const std::string& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) present = true;
    if (!present) extra.push_back(flag + "=" + value);
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

// ---------------------------------------------------------------------------
// Sweep registry.
// ---------------------------------------------------------------------------

struct SweepCtx {
  ChannelOpts ch;
  ChannelHandles ch_handles;
  Manifest* manifest = nullptr;
  double gain = 1.0;
  double alpha = 1.0;
  double bandwidth = 1.0;
  double m_count = 2.0;
  double ebn0 = 1.0;
  double delta = 0.25;
  double time = 1.0;
  double fading_scale = 1.0;
  double rho_max = 64.0;
  double rate = 0.0;
  std::string geometry = "orthogonal";
};

SignalGeometry parse_geometry(const std::string& g) {
  if (g == "orthogonal") return SignalGeometry::kOrthogonal;
  if (g == "simplex") return SignalGeometry::kSimplex;
  throw CLI::ValidationError("--geometry", "must be orthogonal or simplex");
}

std::string default_param(const std::string& op) {
  if (op == "exponent-rc") return "bandwidth";
  if (op == "exponent-moment") return "alpha";
  if (op == "exponent-craig") return "time";
  if (op == "detect-exact") return "ebn0";
  if (op == "detect-lb" || op == "detect-ub") return "delta";
  return "rate";
}

double sweep_value(const std::string& op, const std::string& param,
                   const SweepCtx& c, double x) {
  auto pick = [&](const char* name, double fixed) {
    return param == name ? x : fixed;
  };
  if (op == "exponent-awgn")
    return awgn_reliability(c.ch.resolve(c.ch_handles, *c.manifest), pick("rate", c.rate)).value;
  if (op == "exponent-fading")
    return fading_reliability(pick("gain", c.gain), c.ch.resolve(c.ch_handles, *c.manifest),
                              pick("rate", c.rate));
  if (op == "exponent-sp")
    return sphere_packing_exponent(
               BandSpec(pick("bandwidth", c.bandwidth), c.ch.resolve(c.ch_handles, *c.manifest)),
               pick("rate", c.rate), c.rho_max)
        .value;
  if (op == "exponent-rc")
    return critical_rate(
        BandSpec(pick("bandwidth", c.bandwidth), c.ch.resolve(c.ch_handles, *c.manifest)));
  if (op == "exponent-moment")
    return moment_bound_exponent(c.ch.resolve(c.ch_handles, *c.manifest), pick("alpha", c.alpha))
        .exponent;
  if (op == "exponent-dc")
    return critical_dimension(c.ch.resolve(c.ch_handles, *c.manifest), pick("rate", c.rate));
  if (op == "exponent-outage")
    return outage_probability(
        FadingSpec(c.ch.resolve(c.ch_handles, *c.manifest), c.fading_scale),
        pick("rate", c.rate));
  if (op == "exponent-craig")
    return fading_zero_rate_value(
               FadingSpec(c.ch.resolve(c.ch_handles, *c.manifest), c.fading_scale),
               pick("time", c.time))
        .value;
  if (op == "detect-exact")
    return exact_mary_error(SignalSetSpec(pick("m", c.m_count),
                                          pick("ebn0", c.ebn0),
                                          parse_geometry(c.geometry)));
  if (op == "detect-lb")
    return zero_rate_lower_bound(pick("delta", c.delta), pick("ebn0", c.ebn0));
  if (op == "detect-ub")
    return zero_rate_upper_bound(pick("delta", c.delta), pick("ebn0", c.ebn0));
  throw CLI::ValidationError("sweep", "unknown operation " + op);
}

const std::map<std::string, std::vector<std::string>> kSweepParams = {
    {"exponent-awgn", {"rate"}},
    {"exponent-fading", {"rate", "gain"}},
    {"exponent-sp", {"rate", "bandwidth"}},
    {"exponent-rc", {"bandwidth"}},
    {"exponent-moment", {"alpha"}},
    {"exponent-dc", {"rate"}},
    {"exponent-outage", {"rate"}},
    {"exponent-craig", {"time"}},
    {"detect-exact", {"ebn0", "m"}},
    {"detect-lb", {"delta", "ebn0"}},
    {"detect-ub", {"delta", "ebn0"}},
};

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"exponents, detection bounds, and Monte Carlo for "
               "quantize-and-signal parameter transmission"};
  app.name("modest");
  app.require_subcommand(1);

  // Shared option storage; only the parsed subcommand's callback reads it.
  struct {
    ChannelOpts ch;
    EmitOpts emit;
    double rate = 0.0, gain = 0.0, alpha = 0.0, bandwidth = 0.0, time = 0.0;
    double fading_scale = 0.0, rho_max = 64.0;
  } ex;
  struct {
    EmitOpts emit;
    double m = 2.0, ebn0 = 0.0, delta = 0.25;
    std::string geometry = "orthogonal";
    std::string profile_path;
    double rate = 0.0, time = 0.0, noise = 1.0, eps = 0.0, bin_width = 0.0,
           avg_power = 0.0;
  } de;
  struct {
    ChannelOpts ch;
    EmitOpts emit;
    std::vector<double> rates;
    double time = 0.0, fading_scale = 0.0, ci_level = 0.95;
    double fixed_delta = 0.0;
    bool simplex = false;
    std::uint64_t trials = 0, seed = 0, m_cap = kDefaultMCap;
    unsigned workers = 1;
  } sim;
  struct {
    SweepCtx ctx;
    EmitOpts emit;
    std::string op, param;
    double min = 0.0, max = 0.0;
    int steps = 101;
  } sw;
  struct {
    EmitOpts emit;
    std::string source_path, channel_path;
    double grid_min = 0.0, grid_max = 0.0, rstar = 0.0;
    int steps = 10000;
    ChannelOpts ch;
  } js;

  std::string config_doc;  // shared storage; the pre-pass consumes --config
  auto config_opt = [&config_doc](CLI::App* sub) {
    sub->add_option("--config", config_doc,
                    "flat key=value config file; flags override");
  };

  // ----- exponent -----
  CLI::App* exponent = app.add_subcommand("exponent", "closed-form exponents");
  exponent->require_subcommand(1);
  auto add_exp_sub = [&](const char* name, const char* desc,
                         ChannelHandles& ch_out) {
    CLI::App* s = exponent->add_subcommand(name, desc);
    ch_out = ex.ch.add(s);
    ex.emit.add(s);
    config_opt(s);
    return s;
  };

  {
    ChannelHandles ch_h;
    CLI::App* s = add_exp_sub("awgn", "AWGN reliability function E(R)", ch_h);
    s->add_option("--rate", ex.rate, "rate R, nats/s")
        ->required()
        ->check(CLI::NonNegativeNumber);
    s->callback([&, ch_h] {
      Manifest m{"exponent.awgn", {}};
      ChannelSpec ch = ex.ch.resolve(ch_h, m);
      m.set("rate", ex.rate);
      Reliability r = awgn_reliability(ch, ex.rate);
      emit(Output::value(r.value, {{"strong_converse", r.strong_converse}}),
           ex.emit, m, out, err);
    });
  }
  {
    ChannelHandles ch_h;
    CLI::App* s = add_exp_sub("fading", "reliability at a fixed fading gain", ch_h);
    s->add_option("--gain", ex.gain, "fading gain a")
        ->required()
        ->check(CLI::NonNegativeNumber);
    s->add_option("--rate", ex.rate, "rate R, nats/s")
        ->required()
        ->check(CLI::NonNegativeNumber);
    s->callback([&, ch_h] {
      Manifest m{"exponent.fading", {}};
      ChannelSpec ch = ex.ch.resolve(ch_h, m);
      m.set("gain", ex.gain);
      m.set("rate", ex.rate);
      emit(Output::value(fading_reliability(ex.gain, ch, ex.rate)), ex.emit, m,
           out, err);
    });
  }
  {
    ChannelHandles ch_h;
    CLI::App* s = add_exp_sub("sp", "band-limited sphere-packing exponent", ch_h);
    s->add_option("--bandwidth", ex.bandwidth, "bandwidth W, Hz")
        ->required()
        ->check(CLI::PositiveNumber);
    s->add_option("--rate", ex.rate, "rate R, nats/s")
        ->required()
        ->check(CLI::PositiveNumber);
    s->add_option("--rho-max", ex.rho_max, "upper end of the rho bracket")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    s->callback([&, ch_h] {
      Manifest m{"exponent.sp", {}};
      BandSpec band(ex.bandwidth, ex.ch.resolve(ch_h, m));
      m.set("bandwidth", ex.bandwidth);
      m.set("rate", ex.rate);
      m.set("rho_max", ex.rho_max);
      SpherePacking r = sphere_packing_exponent(band, ex.rate, ex.rho_max);
      emit(Output::value(r.value, {{"rho_star", r.rho_star}}), ex.emit, m, out,
           err);
    });
  }
  {
    ChannelHandles ch_h;
    CLI::App* s = add_exp_sub("rc", "critical rate of the band-limited channel", ch_h);
    s->add_option("--bandwidth", ex.bandwidth, "bandwidth W, Hz")
        ->required()
        ->check(CLI::PositiveNumber);
    s->callback([&, ch_h] {
      Manifest m{"exponent.rc", {}};
      BandSpec band(ex.bandwidth, ex.ch.resolve(ch_h, m));
      m.set("bandwidth", ex.bandwidth);
      emit(Output::value(critical_rate(band)), ex.emit, m, out, err);
    });
  }
  {
    ChannelHandles ch_h;
    CLI::App* s = add_exp_sub("moment", "min_R E(R) + alpha*R", ch_h);
    s->add_option("--alpha", ex.alpha, "moment order")
        ->required()
        ->check(CLI::PositiveNumber);
    s->callback([&, ch_h] {
      Manifest m{"exponent.moment", {}};
      ChannelSpec ch = ex.ch.resolve(ch_h, m);
      m.set("alpha", ex.alpha);
      MomentBound r = moment_bound_exponent(ch, ex.alpha);
      emit(Output::value(r.exponent, {{"r_star", r.rate}}), ex.emit, m, out,
           err);
    });
  }
  {
    ChannelHandles ch_h;
    CLI::App* s = add_exp_sub("dc", "critical dimension floor(C/R)", ch_h);
    s->add_option("--rate", ex.rate, "per-dimension rate R, nats/s")
        ->required()
        ->check(CLI::PositiveNumber);
    s->callback([&, ch_h] {
      Manifest m{"exponent.dc", {}};
      ChannelSpec ch = ex.ch.resolve(ch_h, m);
      m.set("rate", ex.rate);
      emit(Output::value(critical_dimension(ch, ex.rate)), ex.emit, m, out, err);
    });
  }
  {
    ChannelHandles ch_h;
    CLI::App* s = add_exp_sub("outage", "Rayleigh outage probability", ch_h);
    s->add_option("--fading-scale", ex.fading_scale, "Rayleigh scale sigma")
        ->required()
        ->check(CLI::PositiveNumber);
    s->add_option("--rate", ex.rate, "rate R, nats/s")
        ->required()
        ->check(CLI::NonNegativeNumber);
    s->callback([&, ch_h] {
      Manifest m{"exponent.outage", {}};
      FadingSpec fading(ex.ch.resolve(ch_h, m), ex.fading_scale);
      m.set("fading_scale", ex.fading_scale);
      m.set("rate", ex.rate);
      emit(Output::value(outage_probability(fading, ex.rate)), ex.emit, m, out,
           err);
    });
  }
  {
    ChannelHandles ch_h;
    CLI::App* s = add_exp_sub("craig", "exact E{Q(A sqrt(CT))} with bounds", ch_h);
    s->add_option("--fading-scale", ex.fading_scale, "Rayleigh scale sigma")
        ->required()
        ->check(CLI::PositiveNumber);
    s->add_option("--time", ex.time, "duration T, seconds")
        ->required()
        ->check(CLI::PositiveNumber);
    s->callback([&, ch_h] {
      Manifest m{"exponent.craig", {}};
      FadingSpec fading(ex.ch.resolve(ch_h, m), ex.fading_scale);
      m.set("fading_scale", ex.fading_scale);
      m.set("time", ex.time);
      FadingZeroRate r = fading_zero_rate_value(fading, ex.time);
      emit(Output::value(r.value, {{"lower_bound", r.lower_bound},
                                   {"upper_bound", r.upper_bound}}),
           ex.emit, m, out, err);
    });
  }

  // ----- detect -----
  CLI::App* detect = app.add_subcommand("detect", "M-ary detection values");
  detect->require_subcommand(1);
  {
    CLI::App* s = detect->add_subcommand("exact", "exact M-ary error probability");
    de.emit.add(s);
    config_opt(s);
    s->add_option("--m", de.m, "signal count M (real-valued; may be huge)")
        ->required()
        ->check(CLI::Range(2.0, 1e300));
    s->add_option("--ebn0", de.ebn0, "energy ratio E/N0")
        ->required()
        ->check(CLI::NonNegativeNumber);
    s->add_option("--geometry", de.geometry, "orthogonal | simplex")
        ->capture_default_str();
    s->callback([&] {
      Manifest m{"detect.exact", {}};
      m.set("m", de.m);
      m.set("ebn0", de.ebn0);
      m.set("geometry", de.geometry);
      emit(Output::value(exact_mary_error(
               SignalSetSpec(de.m, de.ebn0, parse_geometry(de.geometry)))),
           de.emit, m, out, err);
    });
  }
  {
    CLI::App* s = detect->add_subcommand(
        "bounds", "zero-rate lower/upper excess-error bounds");
    de.emit.add(s);
    config_opt(s);
    s->add_option("--delta", de.delta, "error threshold (full width)")
        ->required()
        ->check(CLI::Range(1e-12, 0.999999999));
    s->add_option("--ebn0", de.ebn0, "energy ratio E/N0")
        ->required()
        ->check(CLI::NonNegativeNumber);
    s->callback([&] {
      Manifest m{"detect.bounds", {}};
      m.set("delta", de.delta);
      m.set("ebn0", de.ebn0);
      Output o = Output::table({"lower", "upper"});
      o.rows.push_back({zero_rate_lower_bound(de.delta, de.ebn0),
                        zero_rate_upper_bound(de.delta, de.ebn0)});
      emit(o, de.emit, m, out, err);
    });
  }
  {
    CLI::App* s = detect->add_subcommand(
        "varpower", "variable-power mixture vs convexified bound");
    de.emit.add(s);
    config_opt(s);
    s->add_option("--profile", de.profile_path,
                  "file of S(u) samples on a uniform u-grid")
        ->required();
    s->add_option("--rate", de.rate, "rate R, nats/s")
        ->required()
        ->check(CLI::PositiveNumber);
    s->add_option("--time", de.time, "duration T, seconds")
        ->required()
        ->check(CLI::PositiveNumber);
    s->add_option("--noise-density", de.noise, "N0, watts/Hz")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    s->add_option("--eps", de.eps, "slack epsilon (default 1/sqrt(T))")
        ->check(CLI::NonNegativeNumber);
    s->add_option("--bin-width", de.bin_width,
                  "power bin width delta, watts (default 1/sqrt(T))")
        ->check(CLI::NonNegativeNumber);
    s->add_option("--avg-power", de.avg_power,
                  "average power cap S (default: profile mean)")
        ->check(CLI::NonNegativeNumber);
    s->callback([&] {
      Manifest m{"detect.varpower", {}};
      std::vector<double> samples = load_profile_samples(de.profile_path);
      double mean = 0.0;
      for (double v : samples) mean += v;
      mean /= static_cast<double>(samples.size());
      double bin = de.bin_width > 0.0 ? de.bin_width : 1.0 / std::sqrt(de.time);
      double cap = de.avg_power > 0.0 ? de.avg_power : mean;
      PowerProfile profile(samples, bin, cap);
      m.set("profile", de.profile_path);
      m.set("samples", static_cast<std::uint64_t>(samples.size()));
      m.set("rate", de.rate);
      m.set("time", de.time);
      m.set("noise_density", de.noise);
      m.set("bin_width", bin);
      m.set("avg_power", cap);
      if (de.eps > 0.0) m.set("eps", de.eps);
      VariablePowerBound r =
          variable_power_bound(profile, de.rate, de.time, de.noise, de.eps);
      Output o = Output::table(
          {"mixture", "convexified", "threshold_time", "ordering_holds"});
      o.rows.push_back(
          {r.mixture, r.convexified, r.threshold_duration, r.ordering_holds});
      emit(o, de.emit, m, out, err);
    });
  }

  // ----- simulate -----
  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo experiments");
  simulate->require_subcommand(1);
  auto add_sim_common = [&](CLI::App* s, bool multi_rate) {
    ChannelHandles h = sim.ch.add(s);
    sim.emit.add(s);
    config_opt(s);
    s->add_option("--time", sim.time, "duration T, seconds")
        ->required()
        ->check(CLI::PositiveNumber);
    if (multi_rate) {
      s->add_option("--rate", sim.rates,
                    "per-dimension rate, nats/s (repeat per dimension)")
          ->required()
          ->check(CLI::PositiveNumber);
    } else {
      s->add_option("--rate", sim.rates, "rate R, nats/s")
          ->expected(0, 1)
          ->check(CLI::PositiveNumber);
    }
    s->add_option("--trials", sim.trials, "trial count")
        ->required()
        ->check(CLI::PositiveNumber);
    s->add_option("--seed", sim.seed, "master seed")->capture_default_str();
    s->add_option("--workers", sim.workers, "worker threads (never changes results)")
        ->check(CLI::Range(1u, 64u))
        ->capture_default_str();
    s->add_option("--m-cap", sim.m_cap, "largest allowed signal-set size")
        ->capture_default_str();
    s->add_option("--ci-level", sim.ci_level, "confidence level for the interval")
        ->check(CLI::Range(1e-6, 0.999999))
        ->capture_default_str();
    return h;
  };
  auto add_fixed_delta = [&](CLI::App* s) {
    CLI::Option* o = s->add_option("--fixed-delta", sim.fixed_delta,
                                   "zero-rate mode: fixed error threshold")
                         ->check(CLI::Range(1e-12, 0.999999999));
    s->add_flag("--simplex", sim.simplex,
                "fixed-delta mode: simplex energy boost M/(M-1)");
    return o;
  };
  auto sim_config = [&](Manifest& m, const ChannelHandles& ch_h,
                        CLI::Option* fd_opt = nullptr) {
    ExperimentConfig cfg{sim.ch.resolve(ch_h, m),
                         sim.time,
                         sim.rates,
                         sim.trials,
                         sim.seed,
                         std::nullopt,
                         std::nullopt,
                         false,
                         sim.m_cap,
                         4096,
                         sim.workers,
                         sim.ci_level};
    m.set("time", sim.time);
    for (std::size_t i = 0; i < sim.rates.size(); ++i)
      m.set(sim.rates.size() == 1 ? "rate" : "rate" + std::to_string(i),
            sim.rates[i]);
    m.set("trials", sim.trials);
    m.set("seed", sim.seed);
    m.set("m_cap", sim.m_cap);
    m.set("ci_level", sim.ci_level);
    if (fd_opt != nullptr && fd_opt->count()) {
      cfg.fixed_delta = sim.fixed_delta;
      cfg.simplex_boost = sim.simplex;
      m.set("fixed_delta", sim.fixed_delta);
      if (sim.simplex) m.set("simplex", std::string("true"));
    }
    return cfg;
  };
  auto emit_tail = [&](const TailEstimate& te, const Manifest& m) {
    Output o = Output::table({"k", "n", "p_hat", "ci_lo", "ci_hi"});
    o.rows.push_back(tail_row(te));
    emit(o, sim.emit, m, out, err);
  };
  {
    CLI::App* s = simulate->add_subcommand("scalar", "scalar grid scheme");
    ChannelHandles ch_h = add_sim_common(s, false);
    CLI::Option* fd = add_fixed_delta(s);
    s->callback([&, ch_h, fd] {
      Manifest m{"simulate.scalar", {}};
      emit_tail(run_excess_error(sim_config(m, ch_h, fd)), m);
    });
  }
  {
    CLI::App* s = simulate->add_subcommand("multidim", "Cartesian product grid");
    ChannelHandles ch_h = add_sim_common(s, true);
    s->callback([&, ch_h] {
      Manifest m{"simulate.multidim", {}};
      emit_tail(run_multidim(sim_config(m, ch_h)), m);
    });
  }
  {
    CLI::App* s = simulate->add_subcommand("fading", "scalar scheme with Rayleigh gain");
    ChannelHandles ch_h = add_sim_common(s, false);
    CLI::Option* fd = add_fixed_delta(s);
    s->add_option("--fading-scale", sim.fading_scale, "Rayleigh scale sigma")
        ->required()
        ->check(CLI::PositiveNumber);
    s->callback([&, ch_h, fd] {
      Manifest m{"simulate.fading", {}};
      ExperimentConfig cfg = sim_config(m, ch_h, fd);
      cfg.fading_scale = sim.fading_scale;
      m.set("fading_scale", sim.fading_scale);
      emit_tail(run_fading(cfg), m);
    });
  }

  // ----- sweep -----
  {
    CLI::App* s = app.add_subcommand("sweep", "tabulate an op over a range");
    s->add_option("op", sw.op, "operation, e.g. exponent-awgn, detect-exact")
        ->required();
    s->add_option("--param", sw.param, "swept parameter (op-specific default)");
    auto* min_opt = s->add_option("--min", sw.min, "range start");
    auto* max_opt = s->add_option("--max", sw.max, "range end");
    s->add_option("--rmin", sw.min, "alias for --min")->excludes(min_opt);
    s->add_option("--rmax", sw.max, "alias for --max")->excludes(max_opt);
    s->add_option("--steps", sw.steps, "number of points")
        ->check(CLI::Range(1, 10000000))
        ->capture_default_str();
    sw.ctx.ch_handles = sw.ctx.ch.add(s);
    sw.emit.add(s);
    config_opt(s);
    s->add_option("--gain", sw.ctx.gain, "fixed fading gain");
    s->add_option("--alpha", sw.ctx.alpha, "fixed moment order");
    s->add_option("--bandwidth", sw.ctx.bandwidth, "fixed bandwidth");
    s->add_option("--m", sw.ctx.m_count, "fixed signal count");
    s->add_option("--ebn0", sw.ctx.ebn0, "fixed energy ratio");
    s->add_option("--delta", sw.ctx.delta, "fixed threshold");
    s->add_option("--time", sw.ctx.time, "fixed duration");
    s->add_option("--fading-scale", sw.ctx.fading_scale, "fixed Rayleigh scale");
    s->add_option("--rho-max", sw.ctx.rho_max, "rho bracket end");
    s->add_option("--rate", sw.ctx.rate, "fixed rate");
    s->add_option("--geometry", sw.ctx.geometry, "orthogonal | simplex");
    s->callback([&] {
      auto it = kSweepParams.find(sw.op);
      if (it == kSweepParams.end())
        throw CLI::ValidationError("sweep", "unknown operation " + sw.op);
      std::string param = sw.param.empty() ? default_param(sw.op) : sw.param;
      const auto& allowed = it->second;
      if (std::find(allowed.begin(), allowed.end(), param) == allowed.end())
        throw CLI::ValidationError(
            "sweep", "op " + sw.op + " cannot sweep parameter " + param);
      if (!(sw.min <= sw.max))
        throw CLI::ValidationError("sweep", "need min <= max");
      Manifest m{"sweep." + sw.op, {}};
      sw.ctx.manifest = &m;
      m.set("param", param);
      m.set("min", sw.min);
      m.set("max", sw.max);
      m.set("steps", sw.steps);
      Output o = Output::table({"param", "value"});
      for (int i = 0; i < sw.steps; ++i) {
        double x = sw.steps == 1
                       ? sw.min
                       : sw.min + (sw.max - sw.min) * i / (sw.steps - 1);
        o.rows.push_back({x, sweep_value(sw.op, param, sw.ctx, x)});
      }
      emit(o, sw.emit, m, out, err);
    });
  }

  // ----- jscc -----
  CLI::App* jscc = app.add_subcommand("jscc", "excess-distortion exponent algebra");
  jscc->require_subcommand(1);
  {
    CLI::App* s = jscc->add_subcommand(
        "eval", "joint and separation exponents from curve files");
    js.emit.add(s);
    config_opt(s);
    s->add_option("--source-curve", js.source_path, "source exponent F file")
        ->required();
    s->add_option("--channel-curve", js.channel_path, "channel exponent E file")
        ->required();
    s->add_option("--grid-min", js.grid_min, "rate grid start")->required();
    s->add_option("--grid-max", js.grid_max, "rate grid end")->required();
    s->add_option("--steps", js.steps, "grid points")
        ->check(CLI::Range(2, 10000000))
        ->capture_default_str();
    s->callback([&] {
      Manifest m{"jscc.eval", {}};
      m.set("source_curve", js.source_path);
      m.set("channel_curve", js.channel_path);
      m.set("grid_min", js.grid_min);
      m.set("grid_max", js.grid_max);
      m.set("steps", js.steps);
      ExponentCurve f = ExponentCurve::load_file(js.source_path);
      ExponentCurve e = ExponentCurve::load_file(js.channel_path);
      std::vector<double> grid = make_rate_grid(js.grid_min, js.grid_max, js.steps);
      Output o = Output::table({"joint", "separation"});
      o.rows.push_back(
          {joint_exponent(f, e, grid), separation_exponent(f, e, grid)});
      emit(o, js.emit, m, out, err);
    });
  }
  {
    CLI::App* s = jscc->add_subcommand(
        "uniform", "step-source equality check against the AWGN curve");
    ChannelHandles ch_h = js.ch.add(s);
    js.emit.add(s);
    config_opt(s);
    s->add_option("--rstar", js.rstar, "knee rate R*")
        ->required()
        ->check(CLI::PositiveNumber);
    s->add_option("--steps", js.steps, "grid points")
        ->check(CLI::Range(2, 10000000))
        ->capture_default_str();
    s->callback([&, ch_h] {
      Manifest m{"jscc.uniform", {}};
      ChannelSpec ch = js.ch.resolve(ch_h, m);
      m.set("rstar", js.rstar);
      m.set("steps", js.steps);
      UniformSourceReport r = uniform_source_equality(js.rstar, ch, js.steps);
      Output o = Output::table({"joint", "separation", "expected"});
      o.rows.push_back({r.joint, r.separation, r.expected});
      emit(o, js.emit, m, out, err);
    });
  }

  // Build argv with a program name for CLI11.
  std::vector<std::string> expanded;
  try {
    expanded = apply_config_file(args);
  } catch (const CLI::FileError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  std::vector<const char*> argv;
  argv.reserve(expanded.size() + 1);
  argv.push_back("modest");
  for (const std::string& a : expanded) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  } catch (const NumericsError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace modest
