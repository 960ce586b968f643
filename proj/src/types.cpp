#include "prelearn/types.hpp"

#include <algorithm>
#include <cctype>

namespace prelearn {
namespace {

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view domain_slug(Domain d) {
  switch (d) {
    case Domain::DataMining: return "data_mining";
    case Domain::Geometry: return "geometry";
    case Domain::Physics: return "physics";
    case Domain::Precalculus: return "precalculus";
  }
  return "unknown";
}

std::string_view domain_short(Domain d) {
  switch (d) {
    case Domain::DataMining: return "DM";
    case Domain::Geometry: return "Geo";
    case Domain::Physics: return "Phy";
    case Domain::Precalculus: return "Prec";
  }
  return "?";
}

Domain parse_domain(std::string_view text) {
  std::string t = lower_ascii(text);
  std::replace(t.begin(), t.end(), ' ', '_');
  std::replace(t.begin(), t.end(), '-', '_');
  if (t == "data_mining" || t == "dm" || t == "datamining") return Domain::DataMining;
  if (t == "geometry" || t == "geo") return Domain::Geometry;
  if (t == "physics" || t == "phy") return Domain::Physics;
  if (t == "precalculus" || t == "prec") return Domain::Precalculus;
  throw std::invalid_argument("unknown domain '" + std::string(text) + "'");
}

std::string_view scenario_name(Scenario s) {
  return s == Scenario::InDomain ? "in-domain" : "cross-domain";
}

Scenario parse_scenario(std::string_view text) {
  std::string t = lower_ascii(text);
  std::replace(t.begin(), t.end(), '_', '-');
  if (t == "in-domain" || t == "indomain") return Scenario::InDomain;
  if (t == "cross-domain" || t == "crossdomain") return Scenario::CrossDomain;
  throw std::invalid_argument("unknown scenario '" + std::string(text) + "'");
}

}  // namespace prelearn
