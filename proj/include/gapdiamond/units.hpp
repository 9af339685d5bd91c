#pragma once

#include <compare>
#include <numbers>

namespace gapdiamond {

// Lengths are stored in meters. Solvers pull nanometers out at their own
// boundary because the grids are laid out in nm.
class Length {
public:
    constexpr Length() = default;

    static constexpr Length meters(double v) { return Length(v); }
    static constexpr Length nanometers(double v) { return Length(v * 1e-9); }
    static constexpr Length micrometers(double v) { return Length(v * 1e-6); }

    constexpr double m() const { return meters_; }
    constexpr double nm() const { return meters_ * 1e9; }
    constexpr double um() const { return meters_ * 1e6; }

    constexpr Length operator+(Length o) const { return Length(meters_ + o.meters_); }
    constexpr Length operator-(Length o) const { return Length(meters_ - o.meters_); }
    constexpr Length operator*(double s) const { return Length(meters_ * s); }
    constexpr Length operator/(double s) const { return Length(meters_ / s); }
    constexpr double operator/(Length o) const { return meters_ / o.meters_; }

    constexpr auto operator<=>(const Length&) const = default;

private:
    constexpr explicit Length(double m) : meters_(m) {}
    double meters_ = 0.0;
};

constexpr Length operator*(double s, Length l) { return l * s; }

namespace literals {
constexpr Length operator""_nm(long double v) { return Length::nanometers(static_cast<double>(v)); }
constexpr Length operator""_nm(unsigned long long v) { return Length::nanometers(static_cast<double>(v)); }
constexpr Length operator""_um(long double v) { return Length::micrometers(static_cast<double>(v)); }
constexpr Length operator""_um(unsigned long long v) { return Length::micrometers(static_cast<double>(v)); }
} // namespace literals

// 10*log10(e): dB per neper of intensity.
inline constexpr double kDbPerNeper = 10.0 * std::numbers::log10e;

// Intensity attenuation coefficient, stored in 1/m.
class Attenuation {
public:
    constexpr Attenuation() = default;

    static constexpr Attenuation per_meter(double v) { return Attenuation(v); }
    static Attenuation db_per_cm(double v);

    constexpr double inverse_meters() const { return per_meter_; }
    double to_db_per_cm() const;

    constexpr auto operator<=>(const Attenuation&) const = default;

private:
    constexpr explicit Attenuation(double v) : per_meter_(v) {}
    double per_meter_ = 0.0;
};

// dB/cm -> 1/m. Throws ValidationError on negative input.
double db_per_cm_to_inverse_meters(double alpha_db_per_cm);
// 1/m -> dB/cm. Throws ValidationError on negative input.
double inverse_meters_to_db_per_cm(double alpha_per_meter);

} // namespace gapdiamond
