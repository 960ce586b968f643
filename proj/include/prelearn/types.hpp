#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace prelearn {

enum class Domain : std::uint8_t { DataMining = 0, Geometry = 1, Physics = 2, Precalculus = 3 };

// Canonical order used for one-hot slots and report rows: DM, Geo, Phy, Prec.
inline constexpr std::array<Domain, 4> kAllDomains = {Domain::DataMining, Domain::Geometry,
                                                      Domain::Physics, Domain::Precalculus};

enum class Scenario : std::uint8_t { InDomain, CrossDomain };

// Thrown for malformed input files. `line` is 1-based; 0 when not applicable.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

std::string_view domain_slug(Domain d);   // "data_mining", "geometry", ...
std::string_view domain_short(Domain d);  // "DM", "Geo", "Phy", "Prec"
// Accepts slugs, short names and display names case-insensitively.
Domain parse_domain(std::string_view text);

std::string_view scenario_name(Scenario s);  // "in-domain" / "cross-domain"
Scenario parse_scenario(std::string_view text);

inline std::size_t domain_index(Domain d) { return static_cast<std::size_t>(d); }

}  // namespace prelearn
