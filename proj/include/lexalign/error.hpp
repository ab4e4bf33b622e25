#ifndef LEXALIGN_ERROR_HPP
#define LEXALIGN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace lexalign {

enum class ErrorKind {
    format,
    missing_word,
    range,
    self_pair,
    duplicate,
    mapping,
    degenerate_vector,
    degenerate_participant,
    undefined_correlation,
    alignment_domain,
    fold_size,
    pruning_failure,
    rank,
    degenerate_predictor,
    shape,
    domain,
    degenerate_test,
    validation,
    io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}

#endif
