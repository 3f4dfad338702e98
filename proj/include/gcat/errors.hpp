#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gcat {

/// Root of every error raised by the library. `kind()` is a stable,
/// machine-parsable tag used by the CLI's single-line error output.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "Error"; }
};

#define GCAT_DECLARE_ERROR(Name)                                               \
    class Name : public Error {                                                \
    public:                                                                    \
        using Error::Error;                                                    \
        const char* kind() const noexcept override { return #Name; }           \
    }

GCAT_DECLARE_ERROR(EmptyDatasetError);
GCAT_DECLARE_ERROR(IndexError);
GCAT_DECLARE_ERROR(InvalidConfigError);
GCAT_DECLARE_ERROR(IoError);
GCAT_DECLARE_ERROR(FormatError);
GCAT_DECLARE_ERROR(ShapeError);
GCAT_DECLARE_ERROR(ChecksumError);
GCAT_DECLARE_ERROR(ContractError);
GCAT_DECLARE_ERROR(RetryableKinkError);
GCAT_DECLARE_ERROR(DivergenceError);

#undef GCAT_DECLARE_ERROR

class ParseError : public Error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
    const char* kind() const noexcept override { return "ParseError"; }
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace gcat
