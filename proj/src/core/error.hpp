#pragma once

#include <stdexcept>
#include <string>

namespace synteval {

/// Error classes map onto the CLI / C API exit codes.
enum class ErrorClass {
    Config = 2,   // bad arguments, malformed specs, missing files named in config
    Data = 3,     // data violates a declared contract (schema, domains, empty sets)
    Numeric = 4,  // numeric failure (singularity, sampler stall, out of support)
};

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), cls_(cls), code_(std::move(code)) {}

    ErrorClass error_class() const noexcept { return cls_; }
    const std::string& code() const noexcept { return code_; }

private:
    ErrorClass cls_;
    std::string code_;
};

[[noreturn]] inline void throw_config(const std::string& code, const std::string& msg) {
    throw Error(ErrorClass::Config, code, msg);
}
[[noreturn]] inline void throw_data(const std::string& code, const std::string& msg) {
    throw Error(ErrorClass::Data, code, msg);
}
[[noreturn]] inline void throw_numeric(const std::string& code, const std::string& msg) {
    throw Error(ErrorClass::Numeric, code, msg);
}

}  // namespace synteval
