#include "unim/compose.hpp"

#include <stdexcept>

namespace unim::compose {

namespace {

void check_unit(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument(std::string(name) + " must be in [0,1]");
}

}  // namespace

double sqcs(double sc, double gq, double eta) {
    check_unit(sc, "sc");
    check_unit(gq, "gq");
    check_unit(eta, "eta");
    return sc * (eta + (1.0 - eta) * gq);
}

double ics(double hc, double sh, double eta) {
    check_unit(hc, "hc");
    check_unit(sh, "sh");
    check_unit(eta, "eta");
    return eta * hc + (1.0 - eta) * sh;
}

double relativize(double absolute, double tau) {
    check_unit(tau, "tau");
    return tau * absolute;
}

double supporting_rate(int supported, int total) {
    if (total <= 0) throw std::invalid_argument("supporting_rate: total must be positive");
    if (supported < 0 || supported > total)
        throw std::invalid_argument("supporting_rate: supported out of range");
    return static_cast<double>(supported) / total;
}

}  // namespace unim::compose
