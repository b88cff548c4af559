#pragma once

#include <cstdint>
#include <string>

#include "ndno/pointcloud.hpp"

namespace ndno {

enum class Family { frame, cbeam, blank };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

// Parametric part description. dims are outer dimensions (Lx, Ly, Lz) in mm.
//
// frame: rectangular box minus an nx x ny grid of rectangular pockets; walls
//        of width w_wall separate and border the pockets, a floor of height
//        w_floor remains under them.
// cbeam: C-profile extruded along x. Web of width w_web at y = 0 spans the
//        full height; flanges of height w_flange at z = 0 and z = Lz span the
//        full depth.
// blank: the full box.
struct ComponentSpec {
    Family family = Family::blank;
    Vec3 dims = Vec3::Zero();  // (Lx, Ly, Lz) mm
    int nx = 0, ny = 0;        // frame pocket grid
    double w_wall = 0.0;       // frame wall thickness, mm
    double w_floor = 0.0;      // frame floor thickness, mm
    double w_flange = 0.0;     // cbeam flange thickness, mm
    double w_web = 0.0;        // cbeam web thickness, mm
    std::uint64_t seed = 0;

    // Throws ValidationError naming the offending field.
    void validate() const;

    bool inside(const Vec3& p) const;

    // Material extent in z at plan position (x, y): Lz over solid regions,
    // w_floor over frame pockets, 2*w_flange over the open span of a cbeam.
    // Positions outside the outer box in plan view return 0.
    double local_thickness(double x, double y) const;

    // Plan-view pocket cell sizes for the frame family.
    double pocket_pitch_x() const;
    double pocket_pitch_y() const;

    ComponentSpec blank_of_same_dims() const;
};

}  // namespace ndno
