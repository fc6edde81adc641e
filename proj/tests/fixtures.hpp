// Shared test algebras and small brute-force helpers.
#pragma once

#include <string>

#include "ualg/congruence.hpp"
#include "ualg/core.hpp"

namespace fixtures {

inline std::string data(const std::string& name) { return std::string(UALG_DATA_DIR) + "/" + name; }

inline ualg::FiniteAlgebra s2() { return ualg::FiniteAlgebra::load(data("s2.alg")); }
inline ualg::FiniteAlgebra d4() { return ualg::FiniteAlgebra::load(data("d4.alg")); }
inline ualg::FiniteAlgebra w8() { return ualg::FiniteAlgebra::load(data("w8.alg")); }

}  // namespace fixtures
