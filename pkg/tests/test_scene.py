import json
import math

import numpy as np
import pytest

from scenescout.errors import MalformedMatrix, ParseError
from scenescout.geometry import generate_pose, look_at_target, pose_to_matrix
from scenescout.scene import (Image, PosedEntry, PosedImageSet, SceneSpec, Sphere, load_posed_set,
                              load_scene, read_ppm, render, save_posed_set, save_scene,
                              training_ring, write_ppm)

RED = (255, 0, 0)


@pytest.fixture
def sphere_scene():
    return SceneSpec([Sphere((0, 0, 0), 1.0, RED)], (0, 0, 0), 45.0, (64, 64))


def red_count(image):
    return int(np.count_nonzero(np.all(image.pixels == RED, axis=-1)))


def disc_area_oracle(fov_y_deg, height, radius, distance):
    # projected silhouette: cone of half-angle asin(r/d) cut by the image plane
    f = 0.5 * height / math.tan(math.radians(fov_y_deg) / 2)
    return math.pi * (f * math.tan(math.asin(radius / distance))) ** 2


class TestRender:
    def test_center_hit_corner_miss(self, sphere_scene):
        img = render(sphere_scene, generate_pose((0, 0, 5), (0, 0, -1), (0, 1, 0)))
        assert (img.width, img.height) == (64, 64)
        assert tuple(img.pixels[32, 32]) == RED
        for r, c in [(0, 0), (0, 63), (63, 0), (63, 63)]:
            assert tuple(img.pixels[r, c]) == (0, 0, 0)

    def test_looking_away_sees_background(self, sphere_scene):
        img = render(sphere_scene, generate_pose((0, 0, 5), (0, 0, 1), (0, 1, 0)))
        assert red_count(img) == 0

    @pytest.mark.parametrize("distance", [3.0, 4.0, 5.0, 6.0, 8.0])
    def test_disc_area_matches_solid_angle(self, sphere_scene, distance):
        scene = sphere_scene.with_resolution(128, 128)
        img = render(scene, look_at_target((0, 0, distance), (0, 0, 0)))
        expected = disc_area_oracle(45.0, 128, 1.0, distance)
        assert red_count(img) == pytest.approx(expected, rel=0.05)

    def test_deterministic_bytes(self, sphere_scene):
        pose = generate_pose((1.3, -0.4, 4.2), (-0.3, 0.1, -1), (0, 1, 0))
        assert render(sphere_scene, pose).tobytes() == render(sphere_scene, pose).tobytes()

    def test_resolution_contract(self):
        scene = SceneSpec([Sphere((0, 0, 0), 1.0)], resolution=(40, 24))
        img = render(scene, look_at_target((0, 0, 5), (0, 0, 0)))
        assert img.pixels.shape == (24, 40, 3)

    def test_on_axis_monotone_in_distance(self, sphere_scene):
        counts = []
        for d in [16.0, 8.0, 4.0, 2.0, 1.5]:
            counts.append(red_count(render(sphere_scene, look_at_target((0, 0, d), (0, 0, 0)))))
        assert counts == sorted(counts)

    def test_nearest_sphere_wins(self):
        scene = SceneSpec([Sphere((0, 0, -3), 1.0, (0, 0, 255)), Sphere((0, 0, 0), 1.0, RED)])
        img = render(scene, look_at_target((0, 0, 5), (0, 0, 0)))
        assert tuple(img.pixels[32, 32]) == RED

    def test_off_axis_sphere_lands_right(self):
        scene = SceneSpec([Sphere((1.5, 0, 0), 0.5, RED)])
        img = render(scene, generate_pose((0, 0, 6), (0, 0, -1), (0, 1, 0)))
        cols = np.nonzero(np.all(img.pixels == RED, axis=-1))[1]
        assert cols.min() > 32


class TestSceneSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            SceneSpec([])
        with pytest.raises(ValueError):
            SceneSpec([Sphere((0, 0, 0), 1.0)], fov_y=180.0)
        with pytest.raises(ValueError):
            Sphere((0, 0, 0), 0.0)

    def test_file_round_trip(self, tmp_path, sphere_scene):
        save_scene(sphere_scene, tmp_path / "s.json")
        assert load_scene(tmp_path / "s.json") == sphere_scene
        doc = json.loads((tmp_path / "s.json").read_text())
        assert doc["format_version"] == 1

    def test_missing_field(self, tmp_path):
        (tmp_path / "s.json").write_text('{"format_version": 1}')
        with pytest.raises(ParseError, match="spheres"):
            load_scene(tmp_path / "s.json")

    def test_wrong_version(self, tmp_path):
        (tmp_path / "s.json").write_text('{"format_version": 2, "spheres": []}')
        with pytest.raises(ParseError, match="format_version"):
            load_scene(tmp_path / "s.json")


def write_pose_file(path, frames, **extra):
    doc = {"format_version": 1, "frames": frames, "fov_y": 45.0, "width": 64, "height": 64}
    doc.update(extra)
    path.write_text(json.dumps(doc))


class TestPoseFiles:
    def test_single_identity_frame(self, tmp_path):
        write_pose_file(tmp_path / "p.json",
                        [{"id": "a", "transform_matrix": np.eye(4).reshape(-1).tolist()}])
        s = load_posed_set(tmp_path / "p.json")
        assert len(s) == 1
        np.testing.assert_array_equal(s.entries[0].pose.origin, [0, 0, 0])
        assert s.entries[0].image is None

    def test_duplicate_ids(self, tmp_path):
        frame = {"id": "dup", "transform_matrix": np.eye(4).reshape(-1).tolist()}
        write_pose_file(tmp_path / "p.json", [frame, frame])
        with pytest.raises(ParseError, match="dup"):
            load_posed_set(tmp_path / "p.json")

    def test_bad_matrix_names_frame(self, tmp_path):
        m = np.eye(4)
        m[3, 3] = 2
        write_pose_file(tmp_path / "p.json", [{"id": "cam7", "transform_matrix": m.reshape(-1).tolist()}])
        with pytest.raises(MalformedMatrix, match="cam7"):
            load_posed_set(tmp_path / "p.json")

    def test_wrong_length_matrix(self, tmp_path):
        write_pose_file(tmp_path / "p.json", [{"id": "a", "transform_matrix": [1, 0, 0]}])
        with pytest.raises(ParseError, match="16 numbers"):
            load_posed_set(tmp_path / "p.json")

    def test_invalid_json_reports_line(self, tmp_path):
        (tmp_path / "p.json").write_text('{\n"frames": [,]\n}')
        with pytest.raises(ParseError, match="line 2"):
            load_posed_set(tmp_path / "p.json")

    def test_round_trip(self, tmp_path, sphere_scene):
        rng = np.random.default_rng(0)
        entries = [PosedEntry(f"f{i}", generate_pose(rng.normal(size=3), rng.normal(size=3),
                                                     (0, 1, 0))) for i in range(3)]
        save_posed_set(PosedImageSet(entries), tmp_path / "p.json")
        loaded = load_posed_set(tmp_path / "p.json")
        assert [e.id for e in loaded] == ["f0", "f1", "f2"]
        for a, b in zip(entries, loaded):
            assert a.pose.allclose(b.pose, atol=1e-9)

    def test_image_reference_loaded(self, tmp_path, sphere_scene):
        pose = look_at_target((0, 0, 5), (0, 0, 0))
        img = render(sphere_scene, pose)
        write_ppm(img, tmp_path / "f0.ppm")
        write_pose_file(tmp_path / "p.json", [{"id": "f0", "file_path": "f0.ppm",
                                               "transform_matrix": pose_to_matrix(pose).reshape(-1).tolist()}])
        loaded = load_posed_set(tmp_path / "p.json")
        assert loaded.entries[0].image == img

    def test_missing_image_is_parse_error(self, tmp_path):
        write_pose_file(tmp_path / "p.json", [{"id": "f0", "file_path": "nope.ppm",
                                               "transform_matrix": np.eye(4).reshape(-1).tolist()}])
        with pytest.raises(ParseError, match="f0"):
            load_posed_set(tmp_path / "p.json")


def test_ppm_round_trip(tmp_path):
    px = np.random.default_rng(1).integers(0, 256, size=(5, 7, 3), dtype=np.uint8)
    img = Image(7, 5, px)
    write_ppm(img, tmp_path / "x.ppm")
    assert read_ppm(tmp_path / "x.ppm") == img


class TestTrainingRing:
    def test_four_points(self, sphere_scene):
        ring = training_ring(sphere_scene, 4, 5.0, 0.0)
        origins = np.array([e.pose.origin for e in ring])
        np.testing.assert_allclose(origins, [[5, 0, 0], [0, 0, 5], [-5, 0, 0], [0, 0, -5]],
                                   atol=1e-12)
        for e in ring:
            np.testing.assert_allclose(e.pose.look_at, -e.pose.origin / 5.0, atol=1e-12)

    def test_two_are_antipodal(self, sphere_scene):
        a, b = training_ring(sphere_scene, 2, 3.0, 0.0)
        np.testing.assert_allclose(a.pose.origin, -b.pose.origin, atol=1e-12)
        np.testing.assert_allclose(a.pose.look_at, -b.pose.look_at, atol=1e-12)

    def test_valid_poses_and_unique_ids(self, sphere_scene):
        ring = training_ring(sphere_scene, 35, 5.0, 1.0)
        assert len({e.id for e in ring}) == 35
        for e in ring:
            assert abs(e.pose.look_at @ e.pose.up) < 1e-9
            assert e.pose.origin[1] == 1.0

    def test_count_validation(self, sphere_scene):
        with pytest.raises(ValueError):
            training_ring(sphere_scene, 1, 5.0)
