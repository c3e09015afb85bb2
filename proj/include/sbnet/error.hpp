#pragma once

#include <stdexcept>
#include <string>

namespace sbnet {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape or size mismatch between operands.
struct DimensionError : Error {
    using Error::Error;
};

// A vector whose norm is below the degeneracy threshold.
struct DegenerateVectorError : Error {
    using Error::Error;
};

// Invalid or inconsistent configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Corpus / file problems: parse failures, dimension drift, insufficient data.
struct DataError : Error {
    using Error::Error;
};

// Class label outside [0, C).
struct LabelError : Error {
    using Error::Error;
};

// API misuse: wrong cache mode, consumed cache, etc.
struct ContractError : Error {
    using Error::Error;
};

// Stratified trial generation cannot find enough identities in a stratum.
struct StratificationError : Error {
    using Error::Error;
};

}  // namespace sbnet
