#pragma once

#include "steep/polynomial.hpp"

namespace steep::examples {

/// Bundled regression functions used by the `examples` subcommand and tests.

/// Four variables: quintic with a cubic/quartic-degenerate direction family.
Polynomial example1();

/// Five variables: quartic with a two-jet-degenerate cone.
Polynomial example2();

/// Three variables, one member of the family indexed by k >= 1 whose jets
/// all solve the m = 2 defining system with parameters k/2 and k^2/2.
Polynomial example3_member(long long k);

/// Pointwise limit of the family: weakly convex at the origin.
Polynomial example3_limit();

}  // namespace steep::examples
