#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace srb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Error raised by an operation that cannot fulfil its contract.  The code
/// is a stable kebab-case identifier, e.g. "orbit-escapes-basin".
class OpError : public std::runtime_error {
public:
  OpError(std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

private:
  std::string code_;
};

}  // namespace srb
