#ifndef VPPSCHED_ERRORS_HPP
#define VPPSCHED_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace vppsched {

/// Caller broke a documented precondition (bad argument, out-of-domain value).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A storage transition or schedule left the physically feasible region.
class InfeasibleError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Scenario / profile / record input could not be parsed or is inconsistent.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace vppsched

#endif
