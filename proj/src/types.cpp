#include "cohortlte/types.hpp"

#include <string>

namespace cohortlte {

std::string_view to_string(Arm arm) { return arm == Arm::Treatment ? "T" : "C"; }

std::string_view to_string(PanelMode mode) {
    return mode == PanelMode::Metric ? "metric" : "presence";
}

std::string_view to_string(Method method) {
    switch (method) {
        case Method::CCD: return "CCD";
        case Method::DiD: return "DiD";
        case Method::MC: return "MC";
    }
    return "?";
}

Arm parse_arm(std::string_view text) {
    if (text == "T") return Arm::Treatment;
    if (text == "C") return Arm::Control;
    throw InputError("unknown arm '" + std::string(text) + "'");
}

Method parse_method(std::string_view text) {
    if (text == "CCD" || text == "ccd") return Method::CCD;
    if (text == "DiD" || text == "did" || text == "DID") return Method::DiD;
    if (text == "MC" || text == "mc") return Method::MC;
    throw InputError("unknown method '" + std::string(text) + "'");
}

}  // namespace cohortlte
