#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mfnet {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using Index = Eigen::Index;

/// Error carrying a short machine-readable code alongside the message.
/// Codes are stable strings ("parse_error", "missing_cell", ...) surfaced
/// verbatim by the CLI.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    [[nodiscard]] const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

namespace errc {
inline constexpr const char* parse = "parse_error";
inline constexpr const char* duplicate = "duplicate_key";
inline constexpr const char* missing = "missing_cell";
inline constexpr const char* non_contiguous = "non_contiguous_months";
inline constexpr const char* out_of_range = "out_of_range";
inline constexpr const char* invalid = "invalid_argument";
inline constexpr const char* non_finite = "non_finite";
inline constexpr const char* convergence = "convergence_failure";
inline constexpr const char* degenerate = "degenerate";
inline constexpr const char* contract = "contract_violation";
inline constexpr const char* io = "io_error";
}  // namespace errc

[[noreturn]] inline void fail(const char* code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace mfnet
