#pragma once

#include <stdexcept>
#include <string>

namespace affpcl {

// Base class for every failure raised by the library. Callers that only
// care about "something went wrong" catch this; tests match the subclasses.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularMatrix : public Error { public: using Error::Error; };
class NotSymmetric : public Error { public: using Error::Error; };
class GenerationFailed : public Error { public: using Error::Error; };
class InvalidConfig : public Error { public: using Error::Error; };
class UnsupportedFamily : public Error { public: using Error::Error; };
class HeterogeneousEnvironment : public Error { public: using Error::Error; };
class MissingDensityRatio : public Error { public: using Error::Error; };
class InvalidHorizon : public Error { public: using Error::Error; };
class EmptyTrajectory : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };

// Config parse/validation failure. `where` is a field path ("instance.n")
// or a "line L, column C" location for syntax errors.
class ConfigError : public Error {
public:
    ConfigError(std::string where, const std::string& what)
        : Error(where.empty() ? what : where + ": " + what), where_(std::move(where)) {}
    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

}  // namespace affpcl
