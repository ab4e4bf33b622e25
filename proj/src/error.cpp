#include "lexalign/error.hpp"

namespace lexalign {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::format: return "format";
        case ErrorKind::missing_word: return "missing-word";
        case ErrorKind::range: return "range";
        case ErrorKind::self_pair: return "self-pair";
        case ErrorKind::duplicate: return "duplicate";
        case ErrorKind::mapping: return "mapping";
        case ErrorKind::degenerate_vector: return "degenerate-vector";
        case ErrorKind::degenerate_participant: return "degenerate-participant";
        case ErrorKind::undefined_correlation: return "undefined-correlation";
        case ErrorKind::alignment_domain: return "alignment-domain";
        case ErrorKind::fold_size: return "fold-size";
        case ErrorKind::pruning_failure: return "pruning-failure";
        case ErrorKind::rank: return "rank";
        case ErrorKind::degenerate_predictor: return "degenerate-predictor";
        case ErrorKind::shape: return "shape";
        case ErrorKind::domain: return "domain";
        case ErrorKind::degenerate_test: return "degenerate-test";
        case ErrorKind::validation: return "validation";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

}
