#include "fuseforge/io/ply.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fuseforge/core/errors.hpp"

namespace fuseforge {

void export_ply(const TriangleMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    const bool colors = mesh.has_colors();

    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << mesh.vertices.size() << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    out << "property float nx\nproperty float ny\nproperty float nz\n";
    if (colors) {
        out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    }
    out << "element face " << mesh.faces.size() << "\n";
    out << "property list uchar int vertex_indices\n";
    out << "end_header\n";

    out.precision(9);
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
        const Eigen::Vector3d& v = mesh.vertices[i];
        const Eigen::Vector3d n =
            i < mesh.normals.size() ? mesh.normals[i] : Eigen::Vector3d::Zero();
        out << v.x() << " " << v.y() << " " << v.z() << " " << n.x() << " " << n.y() << " "
            << n.z();
        if (colors) {
            const Rgb8& c = mesh.colors[i];
            out << " " << int(c.r) << " " << int(c.g) << " " << int(c.b);
        }
        out << "\n";
    }
    for (const auto& f : mesh.faces) {
        out << "3 " << f[0] << " " << f[1] << " " << f[2] << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

TriangleMesh import_ply(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line) || line != "ply") {
        throw IoError(path + ": not a ply file");
    }

    size_t vertex_count = 0, face_count = 0;
    std::vector<std::string> vertex_props;
    std::string current_element;
    bool ascii = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "comment") continue;
        if (tok == "format") {
            std::string fmt;
            ls >> fmt;
            ascii = fmt == "ascii";
        } else if (tok == "element") {
            std::string name;
            size_t count = 0;
            ls >> name >> count;
            current_element = name;
            if (name == "vertex") vertex_count = count;
            else if (name == "face") face_count = count;
        } else if (tok == "property") {
            if (current_element == "vertex") {
                std::string type, name;
                ls >> type >> name;
                vertex_props.push_back(name);
            }
        } else if (tok == "end_header") {
            break;
        }
    }
    if (!ascii) throw IoError(path + ": only ascii ply is supported");

    auto prop_index = [&](const std::string& name) {
        for (size_t i = 0; i < vertex_props.size(); ++i) {
            if (vertex_props[i] == name) return long(i);
        }
        return -1L;
    };
    const long ix = prop_index("x"), iy = prop_index("y"), iz = prop_index("z");
    const long inx = prop_index("nx"), iny = prop_index("ny"), inz = prop_index("nz");
    const long ir = prop_index("red"), ig = prop_index("green"), ib = prop_index("blue");
    if (ix < 0 || iy < 0 || iz < 0) throw IoError(path + ": vertex element lacks x y z");
    const bool has_normals = inx >= 0 && iny >= 0 && inz >= 0;
    const bool has_colors = ir >= 0 && ig >= 0 && ib >= 0;

    TriangleMesh mesh;
    mesh.vertices.reserve(vertex_count);
    if (has_normals) mesh.normals.reserve(vertex_count);
    if (has_colors) mesh.colors.reserve(vertex_count);

    std::vector<double> vals(vertex_props.size());
    for (size_t v = 0; v < vertex_count; ++v) {
        if (!std::getline(in, line)) throw IoError(path + ": truncated vertex list");
        std::istringstream ls(line);
        for (double& x : vals) {
            if (!(ls >> x)) throw IoError(path + ": malformed vertex line " + std::to_string(v));
        }
        mesh.vertices.emplace_back(vals[size_t(ix)], vals[size_t(iy)], vals[size_t(iz)]);
        if (has_normals) {
            mesh.normals.emplace_back(vals[size_t(inx)], vals[size_t(iny)], vals[size_t(inz)]);
        }
        if (has_colors) {
            mesh.colors.push_back({uint8_t(vals[size_t(ir)]), uint8_t(vals[size_t(ig)]),
                                   uint8_t(vals[size_t(ib)])});
        }
    }

    mesh.faces.reserve(face_count);
    for (size_t f = 0; f < face_count; ++f) {
        if (!std::getline(in, line)) throw IoError(path + ": truncated face list");
        std::istringstream ls(line);
        int n = 0;
        if (!(ls >> n) || n != 3) {
            throw IoError(path + ": face " + std::to_string(f) + " is not a triangle");
        }
        std::array<uint32_t, 3> face{};
        for (int k = 0; k < 3; ++k) {
            long idx = -1;
            if (!(ls >> idx) || idx < 0 || size_t(idx) >= mesh.vertices.size()) {
                throw IoError(path + ": face " + std::to_string(f) + " has invalid vertex index");
            }
            face[size_t(k)] = uint32_t(idx);
        }
        mesh.faces.push_back(face);
    }
    return mesh;
}

}  // namespace fuseforge
