#include "mfrnn/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "mfrnn/architecture.hpp"

namespace mfrnn {

namespace {

[[noreturn]] void parse_error(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

double read_number(const Json& v, const std::string& where) {
  if (!v.is_number()) parse_error(where + " must be a number");
  return v.get<double>();
}

}  // namespace

ThetaDocument theta_from_json(const Json& doc, bool partial) {
  if (!doc.is_object()) parse_error("theta document must be a JSON object");
  ThetaDocument out;
  for (const auto& [key, value] : doc.items()) {
    if (key != "arch" && key != "gates") parse_error("unknown key '" + key + "' in theta document");
  }
  if (doc.contains("arch")) {
    if (!doc["arch"].is_string()) parse_error("'arch' must be a string");
    out.arch = doc["arch"].get<std::string>();
  }
  if (!doc.contains("gates")) parse_error("theta document has no 'gates'");
  const Json& gates = doc["gates"];
  if (!gates.is_object()) parse_error("'gates' must be an object");
  for (const auto& [label, g] : gates.items()) {
    if (!g.is_object()) parse_error("gate '" + label + "' must be an object");
    GateParams p;
    for (const auto& [field, v] : g.items()) {
      const std::string where = "gates." + label + "." + field;
      if (field == "sigma2") {
        p.sigma2 = read_number(v, where);
      } else if (field == "nu2") {
        p.nu2 = read_number(v, where);
      } else if (field == "rho2") {
        p.rho2 = read_number(v, where);
      } else if (field == "mu") {
        p.mu = read_number(v, where);
      } else {
        parse_error("unknown key '" + field + "' in gate '" + label + "'");
      }
    }
    if (!partial) {
      for (const char* field : {"sigma2", "nu2", "rho2", "mu"}) {
        if (!g.contains(field)) parse_error("gate '" + label + "' is missing '" + field + "'");
      }
    }
    out.theta[label] = p;
  }
  return out;
}

Json theta_to_json(const Hyperparameters& theta, std::string_view arch) {
  Json gates = Json::object();
  for (const auto& [label, g] : theta.gates) {
    gates[label] = {{"sigma2", g.sigma2}, {"nu2", g.nu2}, {"rho2", g.rho2}, {"mu", g.mu}};
  }
  return {{"arch", std::string(arch)}, {"gates", gates}};
}

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

ThetaDocument load_theta(const std::string& path, bool partial) {
  return theta_from_json(load_json(path), partial);
}

const ArchitectureSpec& resolve_arch(const ThetaDocument& doc, std::string_view cli_arch) {
  if (!cli_arch.empty() && !doc.arch.empty() && cli_arch != doc.arch) {
    throw Error(ErrorCode::InvalidArgument,
                "--arch " + std::string(cli_arch) + " does not match the document's arch '" + doc.arch + "'");
  }
  const std::string_view name = cli_arch.empty() ? std::string_view(doc.arch) : cli_arch;
  if (name.empty()) throw Error(ErrorCode::InvalidArgument, "no architecture given (use --arch or an 'arch' key)");
  const ArchitectureSpec& arch = architecture(name);
  validate_theta(doc.theta, arch);
  return arch;
}

InputStats inputs_from_json(const Json& doc) {
  if (!doc.is_object()) parse_error("input statistics must be a JSON object");
  InputStats s;
  for (const auto& [key, v] : doc.items()) {
    if (key == "R") {
      s.R = read_number(v, "R");
    } else if (key == "sigma_z") {
      if (v.is_array()) {
        throw Error(ErrorCode::InvalidArgument, "time-varying sigma_z is not supported in analysis runs");
      }
      s.sigma_z = read_number(v, "sigma_z");
    } else {
      parse_error("unknown key '" + key + "' in input statistics");
    }
  }
  s.validate();
  return s;
}

std::vector<InputStats> load_schedule(const std::string& path, double R) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  std::vector<InputStats> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    const std::string tok = line.substr(b, e - b + 1);
    if (out.empty() && tok == "sigma_z") continue;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      parse_error(path + ":" + std::to_string(lineno) + ": not a number: '" + tok + "'");
    }
    InputStats s{R, v};
    s.validate();
    out.push_back(s);
  }
  if (out.empty()) parse_error(path + ": empty schedule");
  return out;
}

Json number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

Json to_json(const FixedPointReport& r) {
  Json traj = Json::array();
  for (double c : r.c_trajectory) traj.push_back(number(c));
  return {
      {"mu_star", number(r.mu_star)},
      {"q_star", number(r.q_star)},
      {"c_star", number(r.c_star)},
      {"chi", number(r.chi)},
      {"chi_se", number(r.chi_se)},
      {"xi", number(r.xi)},
      {"chi_method", r.chi_method},
      {"stable", r.stable()},
      {"converged", r.converged},
      {"damped", r.damped},
      {"moment_iterations", r.moment_iterations},
      {"correlation_iterations", r.correlation_iterations},
      {"moment_residual", number(r.moment_residual)},
      {"correlation_residual", number(r.correlation_residual)},
      {"se_mu", number(r.se_mu)},
      {"se_q", number(r.se_q)},
      {"se_c", number(r.se_c)},
      {"c_trajectory", traj},
  };
}

Json to_json(const JacobianMoments& m, const IsometryGap& gap, const FixedPointReport& fixed) {
  return {
      {"m1", number(m.m1)},
      {"m2", number(m.m2)},
      {"sigma", number(m.sigma)},
      {"se_m1", number(m.se_m1)},
      {"sigma_clamp", number(m.clamp)},
      {"chi", number(fixed.chi)},
      {"xi", number(fixed.xi)},
      {"residuals", {{"chi", number(gap.chi)}, {"m1", number(gap.m1)}, {"sigma", number(gap.sigma)},
                     {"norm", number(gap.norm)}}},
      {"critical", gap.critical},
  };
}

Json preset_meta(const Preset& p) {
  Json meta = {{"preset", p.name}, {"arch", p.arch}};
  if (p.N > 0) {
    meta["N"] = p.N;
    meta["input_dim"] = p.input_dim;
    meta["recurrent_entry_var"] = p.recurrent_entry_var;
    meta["input_entry_var"] = p.input_entry_var;
  }
  return meta;
}

Json search_meta(const CriticalPoint& p) {
  Json j = {
      {"objective", number(p.objective)},
      {"evaluations", p.evaluations},
      {"origin", p.origin},
      {"chi", number(p.fixed.chi)},
      {"xi", number(p.fixed.xi)},
      {"m1", number(p.moments.m1)},
      {"m2", number(p.moments.m2)},
      {"sigma", number(p.moments.sigma)},
      {"residuals", {{"chi", number(p.gap.chi)}, {"m1", number(p.gap.m1)}, {"sigma", number(p.gap.sigma)},
                     {"norm", number(p.gap.norm)}}},
      {"critical", p.gap.critical},
  };
  return j;
}

Json error_json(std::string_view code, std::string_view message) {
  return {{"error", std::string(code)}, {"message", std::string(message)}};
}

Json error_json(const Error& e) { return error_json(to_string(e.code()), e.what()); }

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(std::ostream& out, std::vector<std::string> header) : out_(out), columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

void CsvWriter::sep() {
  if (filled_ == columns_) throw Error(ErrorCode::InvalidArgument, "CSV row has too many fields");
  if (filled_++) out_ << ',';
}

CsvWriter& CsvWriter::operator<<(double x) {
  sep();
  out_ << format_double(x);
  return *this;
}

CsvWriter& CsvWriter::operator<<(long long x) {
  sep();
  out_ << x;
  return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& x) {
  sep();
  if (x.find_first_of(",\"\n") == std::string::npos) {
    out_ << x;
  } else {
    out_ << '"';
    for (char ch : x) out_ << (ch == '"' ? "\"\"" : std::string(1, ch));
    out_ << '"';
  }
  return *this;
}

void CsvWriter::end_row() {
  if (filled_ != columns_) throw Error(ErrorCode::InvalidArgument, "CSV row has too few fields");
  out_ << '\n';
  filled_ = 0;
}

}  // namespace mfrnn
