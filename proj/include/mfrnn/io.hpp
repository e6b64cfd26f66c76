#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mfrnn/core.hpp"
#include "mfrnn/criticality.hpp"
#include "mfrnn/fixed_point.hpp"
#include "mfrnn/jacobian.hpp"
#include "mfrnn/simulator.hpp"

namespace mfrnn {

using Json = nlohmann::ordered_json;

struct ThetaDocument {
  /// Empty when the document has no "arch" key.
  std::string arch;
  Hyperparameters theta;
};

/// Strict reader: unknown keys and non-numeric values are ParseErrors. With
/// partial = false every gate needs all four fields; partial documents
/// (sweep directions) default missing fields to 0.
ThetaDocument theta_from_json(const Json& doc, bool partial = false);
Json theta_to_json(const Hyperparameters& theta, std::string_view arch);

ThetaDocument load_theta(const std::string& path, bool partial = false);
Json load_json(const std::string& path);

/// Resolves the architecture from --arch and/or the document; a mismatch is an
/// InvalidArgument. Also runs validate_theta unless partial.
const ArchitectureSpec& resolve_arch(const ThetaDocument& doc, std::string_view cli_arch);

/// {"R": x, "sigma_z": y}. An array-valued sigma_z is rejected: analysis runs
/// take one constant input correlation.
InputStats inputs_from_json(const Json& doc);

/// One sigma_z per line ('#' comments and a "sigma_z" header allowed).
std::vector<InputStats> load_schedule(const std::string& path, double R);

/// Non-finite numbers become the strings "inf", "-inf" or "nan".
Json number(double x);

Json to_json(const FixedPointReport& r);
Json to_json(const JacobianMoments& m, const IsometryGap& gap, const FixedPointReport& fixed);
/// Metadata beside a Theta document (the document itself is theta_to_json).
Json preset_meta(const Preset& p);
Json search_meta(const CriticalPoint& p);
Json error_json(const Error& e);
Json error_json(std::string_view code, std::string_view message);

/// 17 significant digits; inf/nan spelled out.
std::string format_double(double x);

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::vector<std::string> header);
  CsvWriter& operator<<(double x);
  CsvWriter& operator<<(long long x);
  CsvWriter& operator<<(int x) { return *this << static_cast<long long>(x); }
  CsvWriter& operator<<(const std::string& x);
  void end_row();

 private:
  void sep();
  std::ostream& out_;
  std::size_t columns_;
  std::size_t filled_ = 0;
};

}  // namespace mfrnn
