#include "cyclegen/cycle.hpp"

#include "cyclegen/error.hpp"

namespace cyclegen {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::piesmc: return "piesmc";
    case Method::mtb: return "mtb";
    case Method::mcb: return "mcb";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "piesmc") return Method::piesmc;
  if (name == "mtb") return Method::mtb;
  if (name == "mcb") return Method::mcb;
  throw input_error("unknown method '" + std::string(name) + "' (expected piesmc, mtb or mcb)");
}

}  // namespace cyclegen
