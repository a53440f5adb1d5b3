#include "radloc/errors.hpp"

#include <sstream>

namespace radloc {

namespace {

std::string JoinProblems(const std::vector<std::string>& problems) {
  std::ostringstream os;
  os << "invalid configuration";
  for (const auto& p : problems) os << "\n  - " << p;
  return os.str();
}

}  // namespace

ScatteringRejected::ScatteringRejected(double cosine)
    : Error("scattering cosine B = " + std::to_string(cosine) + " outside (-1, 1)"),
      cosine_(cosine) {}

ExtrapolationError::ExtrapolationError(double t, double first, double last)
    : Error("time " + std::to_string(t) + " s outside pose stream [" + std::to_string(first) +
            ", " + std::to_string(last) + "]") {}

ParseError::ParseError(std::string source, std::size_t line, const std::string& what)
    : Error(source + ":" + std::to_string(line) + ": " + what),
      source_(std::move(source)),
      line_(line) {}

SchemaError::SchemaError(std::vector<std::string> problems)
    : Error(JoinProblems(problems)), problems_(std::move(problems)) {}

}  // namespace radloc
