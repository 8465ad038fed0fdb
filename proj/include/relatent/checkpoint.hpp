#pragma once

#include <string>

#include "relatent/adam.hpp"
#include "relatent/nn.hpp"

namespace relatent {

/// Writes `<prefix>.json` (names, shapes, dtype, byte offsets) and
/// `<prefix>.bin` (flat little-endian IEEE-754 doubles). Round-trips are
/// bit-exact.
void save_params(const ParamStore& params, const std::string& prefix);

/// Loads into an already-built store; names and shapes must match exactly.
void load_params(ParamStore& params, const std::string& prefix);

/// Optimizer moments + step counter, same container format under
/// `<prefix>.opt.json` / `<prefix>.opt.bin`.
void save_optimizer(const AdamOptimizer& opt, const ParamStore& params,
                    const std::string& prefix);
void load_optimizer(AdamOptimizer& opt, const ParamStore& params,
                    const std::string& prefix);

}  // namespace relatent
