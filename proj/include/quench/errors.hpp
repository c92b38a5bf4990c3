#pragma once

#include <stdexcept>
#include <string>

namespace quench {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Evaluation requested on (or within machine tolerance of) the singular set.
struct SingularInput : Error { using Error::Error; };

struct InvalidParameter : Error { using Error::Error; };

// Integration reached the hard time cap without quenching.
struct HorizonExceeded : Error { using Error::Error; };

// A sampled state violated its branch predicate; the exact flow cannot do
// this, so it signals an integration failure.
struct LeftSeedRegion : Error { using Error::Error; };

// The trajectory tail is inconsistent with the local quench model.
struct ModelMismatch : Error { using Error::Error; };

struct UnsupportedField : Error { using Error::Error; };
struct EpsilonTooLarge : Error { using Error::Error; };
struct BudgetExceeded : Error { using Error::Error; };
struct ParamOutOfRange : Error { using Error::Error; };
struct WrongField : Error { using Error::Error; };
struct Unsupported : Error { using Error::Error; };

// Closed-form comparison solution queried past its quench window.
struct OutOfWindow : Error { using Error::Error; };

}  // namespace quench
