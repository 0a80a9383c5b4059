#pragma once

namespace noisygt {

enum class DesignKind { ConstantColumn, Bernoulli };
enum class Algorithm { Comp, Dd, Converse };

inline const char* design_kind_name(DesignKind k) {
    return k == DesignKind::ConstantColumn ? "constant-column" : "bernoulli";
}

inline const char* algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::Comp: return "comp";
        case Algorithm::Dd: return "dd";
        default: return "converse";
    }
}

}  // namespace noisygt
