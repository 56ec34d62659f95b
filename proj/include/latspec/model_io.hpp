#pragma once

#include <optional>
#include <string>

#include "latspec/two_particle.hpp"

namespace latspec {

/// Model file (JSON):
///
///   {
///     "hopping":   [{"s": [0,0,0], "re": 6.0, "im": 0.0}, ...],
///     "hopping2":  [...],                                  (optional)
///     "potential": [{"s": [0,0,0], "value": -1.0}, ...]
///   }
///
/// Missing hopping partners at -s are filled with the conjugate; listed
/// partners must already match. "im" defaults to 0, "potential" to empty.
struct ModelFile {
  HoppingCoefficients hopping;
  std::optional<HoppingCoefficients> hopping2;
  HoppingCoefficients potential;
};

/// Throws ModelValidationError with "source:line: message" diagnostics.
ModelFile parse_model(const std::string& text, const std::string& source = "<model>");
ModelFile load_model(const std::string& path);

std::string serialize_model(const ModelFile& model);

OneParticleModel to_one_particle(const ModelFile& model);
/// Particle 2 uses "hopping2" when present, "hopping" otherwise.
TwoParticleModel to_two_particle(const ModelFile& model);

}  // namespace latspec
