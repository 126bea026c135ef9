#pragma once

#include <stdexcept>
#include <string>

namespace dcpass {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ratfun
class DegenerateParallel : public Error { public: using Error::Error; };
class DegenerateLoop : public Error { public: using Error::Error; };
class NearPole : public Error { public: using Error::Error; };

// plant
class NoRealSolution : public Error { public: using Error::Error; };
class NonViableDuty : public Error { public: using Error::Error; };

// control synthesis
class BandwidthInfeasible : public Error { public: using Error::Error; };

// impedance assembly
class UnsolvedOperatingPoint : public Error { public: using Error::Error; };
class InconsistentDroopKind : public Error { public: using Error::Error; };
class UnboundSymbol : public Error { public: using Error::Error; };

// time domain
class InvalidTimestep : public Error { public: using Error::Error; };
class WindowTooShort : public Error { public: using Error::Error; };
class UnstableBase : public Error { public: using Error::Error; };
class PoorExcitation : public Error { public: using Error::Error; };

// configuration
class ParseError : public Error { public: using Error::Error; };
class ValidationError : public Error { public: using Error::Error; };

}  // namespace dcpass
