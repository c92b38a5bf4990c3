#pragma once

#include <optional>
#include <string>

#include "quench/geometry.hpp"

namespace quench {

// The three singular planar vector fields.
//
//   F1:  f(y) = ( y2/(1-y1),  y1+y2 )            singular on { y1 = 1 }
//   F2:  f(y) = y / (1-||y||)                    singular on { ||y|| = 1 }
//   F3:  f(y) = ( 1/(1-y2),  1/(1-y1) )          singular on { y1 = 1 or y2 = 1 }
enum class FieldKind { F1, F2, F3 };

// Side of the singular set preserved along every admissible trajectory.
// F1: y1 < 1 vs y1 > 1; F2: ||y|| < 1 vs > 1; F3: both coordinates < 1 vs > 1.
enum class Branch { Below, Above };

const char* to_string(FieldKind kind);
const char* to_string(Branch branch);

// Field value at y.  Throws SingularInput when y is on or within machine
// tolerance of the singular set (the integrator owns quench handling, so no
// smoothing or clipping happens here).
Vec2 eval_field(FieldKind kind, Vec2 y);

// Standard Jacobian J with J[i][j] = d f_i / d y_j.  Note the convention:
// some derivations use the transposed arrangement (d g_j / d y_i in row i);
// all such transposes live in the pmp module, never here.
Mat2 eval_jacobian(FieldKind kind, Vec2 y);

// Distance from y to the singular set of the field:
// F1: |1-y1|; F2: |1-||y|||; F3: min(|1-y1|, |1-y2|).
double singular_distance(FieldKind kind, Vec2 y);

// Membership test for the seed region S^f with worst-case drift k0 > 0.
// Returns the branch when y0 lies in the corresponding open component:
//   F1 Below: y1 in (1-1/(2k0), 1),  y2 > k0 + 1/k0 - 1
//   F1 Above: y1 in (1, 1+1/(2k0)),  y2 > k0 + 1
//   F2 Below: ||y|| in (1-1/(2k0+1), 1);  Above: ||y|| in (1, 1+1/(2k0))
//   F3 Below: both coords in (1-e^{-3/2}/(2k0), 1);  Above: mirrored above 1
// Boundary points are excluded (the components are open sets).
std::optional<Branch> in_seed_region(FieldKind kind, Vec2 y0, double k0);

// True when y lies strictly on the given side of the singular set.
bool on_branch(FieldKind kind, Branch branch, Vec2 y);

}  // namespace quench
