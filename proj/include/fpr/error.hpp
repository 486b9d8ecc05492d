#pragma once

#include <stdexcept>
#include <string>

namespace fpr {

enum class Errc {
    // file formats
    malformed_header,
    truncated_payload,
    size_mismatch,
    version_mismatch,
    // tables
    missing_column,
    bad_number,
    bad_label,
    bad_value,
    // numerics / datasets
    shape_mismatch,
    out_of_volume,
    empty_input,
    too_few_samples,
    degenerate_features,
    single_class,
    missing_assignment,
    placement_failed,
    // pipeline
    missing_artifact,
    invalid_config,
    io_error,
};

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

} // namespace fpr
