#pragma once
#include <stdexcept>
#include <string>

namespace cbr {

// Coarse classes map onto process exit codes and C-API status codes.
enum class ErrorClass {
    Usage = 1,     // bad arguments / configuration
    Data = 2,      // malformed files, invariant violations
    Gateway = 3,   // transport / remote service failures
};

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, std::string code, const std::string& message)
        : std::runtime_error(message), cls_(cls), code_(std::move(code)) {}

    ErrorClass error_class() const { return cls_; }
    const std::string& code() const { return code_; }

private:
    ErrorClass cls_;
    std::string code_;
};

inline Error usage_error(std::string code, const std::string& msg) {
    return Error(ErrorClass::Usage, std::move(code), msg);
}
inline Error data_error(std::string code, const std::string& msg) {
    return Error(ErrorClass::Data, std::move(code), msg);
}
inline Error gateway_error(std::string code, const std::string& msg) {
    return Error(ErrorClass::Gateway, std::move(code), msg);
}

}  // namespace cbr
