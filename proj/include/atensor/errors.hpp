#pragma once

#include <stdexcept>
#include <string>

namespace atensor {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Point lies outside the chart domain (or its interior safety margin).
struct domain_error : error { using error::error; };
// Evaluator produced a non-finite value.
struct evaluation_error : error { using error::error; };
// Metric (or another matrix that must be inverted) is too ill-conditioned.
struct conditioning_error : error { using error::error; };
// Frame seeds are linearly dependent at the working tolerance.
struct degenerate_frame_error : error { using error::error; };
// Plane spanned by two near-parallel vectors.
struct degenerate_plane_error : error { using error::error; };
// An operation's verified precondition does not hold (e.g. non-unit field).
struct precondition_error : error { using error::error; };
// A field required to be nonvanishing dips below tolerance.
struct vanishing_field_error : error { using error::error; };
// Adaptive step size underflowed.
struct stiffness_error : error { using error::error; };
// Trajectory left the domain before a single step was accepted.
struct degenerate_trajectory_error : error { using error::error; };
// Supplied connection potential fails da = -alpha*omega.
struct potential_error : error { using error::error; };
// Bad CLI / run configuration.
struct usage_error : error { using error::error; };

}  // namespace atensor
