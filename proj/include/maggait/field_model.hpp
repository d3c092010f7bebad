// Field sources the gait and the simulator can be driven by.
#pragma once

#include "rig.hpp"

namespace maggait {

/// Ideal uniform cone field: static component along the heading, rotating
/// component of the same circle at every alpha. No gradient.
struct ConeFieldModel {
    double pitch = 66.0;       // degrees
    double magnitude = 7.5e-3; // tesla
};

struct RigFieldModel {
    RigConfig config;
};

class FieldModel {
public:
    FieldModel() = default;
    FieldModel(ConeFieldModel cone) : model_(cone) {}
    FieldModel(RigFieldModel rig) : model_(std::move(rig)) {}

    bool is_rig() const { return std::holds_alternative<RigFieldModel>(model_); }
    const ConeFieldModel* cone() const { return std::get_if<ConeFieldModel>(&model_); }
    const RigFieldModel* rig() const { return std::get_if<RigFieldModel>(&model_); }

    Vec3 B(double alpha, double beta, const Vec3& point) const {
        if (const auto* c = cone()) {
            const double th = deg2rad(c->pitch);
            const double a = deg2rad(alpha);
            const Vec3 local(std::cos(th), std::sin(th) * std::cos(a), std::sin(th) * std::sin(a));
            return yaw_rotation(beta) * (c->magnitude * local);
        }
        return rig_B(rig()->config, RigState{alpha, beta}, point);
    }

    FieldSample sample(double alpha, double beta, const Vec3& point) const {
        if (cone() != nullptr) {
            FieldSample s;
            s.position = point;
            s.B = B(alpha, beta, point);
            return s;
        }
        return rig_field(rig()->config, RigState{alpha, beta}, point);
    }

    ConeParameters cone_at(double beta, const Vec3& point, double alpha_max) const {
        return cone_parameters([&](double a) { return B(a, beta, point); }, beta, alpha_max);
    }

private:
    std::variant<ConeFieldModel, RigFieldModel> model_{ConeFieldModel{}};
};

} // namespace maggait
