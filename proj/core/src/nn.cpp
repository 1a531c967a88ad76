#include "lsd/nn.hpp"

#include "lsd/error.hpp"

namespace lsd::nn {

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::linear:
            return "linear";
        case Activation::relu:
            return "relu";
        case Activation::tanh:
            return "tanh";
        case Activation::sigmoid:
            return "sigmoid";
        case Activation::softmax:
            return "softmax";
    }
    return "linear";
}

Activation parse_activation(std::string_view name) {
    for (Activation a : {Activation::linear, Activation::relu, Activation::tanh, Activation::sigmoid,
                         Activation::softmax}) {
        if (to_string(a) == name) return a;
    }
    throw FormatError("unknown activation '" + std::string(name) + "'");
}

}  // namespace lsd::nn
