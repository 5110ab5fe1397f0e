#ifndef MARGIN_CASCADE_ERRORS_HPP
#define MARGIN_CASCADE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace margin_cascade {

/// Invalid parameters or configuration documents. The message starts with the
/// offending field path.
class config_error : public std::invalid_argument {
public:
    config_error(const std::string& field, const std::string& reason)
        : std::invalid_argument(field + ": " + reason), field_(field) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// An operation was called on a market in the wrong lifecycle state
/// (e.g. shocking twice, stepping before the shock).
class state_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// An operation was asked for a quantity that does not exist
/// (e.g. the maintenance ratio of a liquidated account).
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An output destination could not be opened or written.
class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace margin_cascade

#endif  // MARGIN_CASCADE_ERRORS_HPP
