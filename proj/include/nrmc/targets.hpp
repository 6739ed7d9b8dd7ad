#pragma once

#include "nrmc/types.hpp"

namespace nrmc {

// Circle of even length S >= 4: mass 1 on odd labels, rho on even labels.
Target rugged_circle(Index S, double rho);

// Circle of odd length S >= 5 with pi(k) proportional to k.
Target linear_circle(Index S);

Target uniform_circle(Index S);

/// S x S grid target with unit base mass and a modulated band along the two
/// vertical borders.
///
/// Weight of cell (r, c), both 0-based, is
///   w(r, c) = 1 + (contrast - 1) * edge(c) * wave(r)
/// with edge(c) = max(0, 1 - d(c) / b), d(c) = min(c, S-1-c) the distance to
/// the nearest vertical border, b = max(1, S / 5) the band width, and
/// wave(r) = (1 - cos(2 pi r / (S-1))) / 2 varying along the vertical axis.
/// The centre of the grid keeps uniform mass, the field is symmetric under
/// both mirror reflections, and max/min = contrast exactly for odd S (for
/// even S the wave peaks between two rows and the ratio falls slightly short).
/// Requires 1 <= contrast < 1.5.
Target sigma_grid(Index S, double contrast);

// Q(x, x +- 1) = 1/2 on the circle.
ProposalKernel neighbor_proposal_circle(Index S);

// Q(x, x) = eps, Q(x, x +- 1) = (1 - eps) / 2.
ProposalKernel lazy_proposal_circle(Index S, double eps);

// Nearest-neighbour proposal on the non-toroidal S x S grid, uniform over the
// 2, 3 or 4 available neighbours.
ProposalKernel grid_proposal(Index S);

// Row-major linearization of grid cells (0-based).
inline Index grid_index(Index row, Index col, Index S) { return row * S + col; }

/// Test function over 1-based state labels (linearized labels for grids).
/// `param` is the 1-based state for indicators and the exponent n >= 0 for
/// (inverse) polynomials; identity ignores it.
TestFunction test_function(const Target& target, FunctionKind kind, int param = 0);

TestFunction custom_function(Vector values, std::string label);

}  // namespace nrmc
