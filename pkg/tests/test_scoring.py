import math
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenescout.errors import EmptyPeaks, ScorerError
from scenescout.geometry import generate_pose, look_at_target
from scenescout.scene import Image, SceneSpec, Sphere, render
from scenescout.scoring import (ExternalScorer, PoseScorer, Scorer, gaussian_landscape_score,
                                multimodal_landscape_score, multimodal_scorer,
                                salient_pixel_count, salient_scorer)

RED = (255, 0, 0)
PEAK = generate_pose((0, 0, 0), (0, 0, -1), (0, 1, 0))


def solid_image(w, h, color):
    return Image(w, h, np.tile(np.array(color, dtype=np.uint8), (h, w, 1)))


class TestSalient:
    def test_background_only(self):
        assert salient_pixel_count(solid_image(64, 64, (0, 0, 0)), RED) == 1.0

    def test_full_frame(self):
        assert salient_pixel_count(solid_image(64, 64, RED), RED, 0) == 4097.0

    def test_tolerance(self):
        img = solid_image(4, 4, (250, 3, 0))
        assert salient_pixel_count(img, RED, 4) == 1.0
        assert salient_pixel_count(img, RED, 5) == 17.0

    def test_rendered_sphere_matches_disc_area(self):
        scene = SceneSpec([Sphere((0, 0, 0), 1.0, RED)], resolution=(128, 128))
        img = render(scene, look_at_target((0, 0, 5), (0, 0, 0)))
        f = 64 / math.tan(math.radians(22.5))
        expected = math.pi * (f * math.tan(math.asin(1 / 5))) ** 2
        assert salient_pixel_count(img, RED) - 1 == pytest.approx(expected, rel=0.05)

    def test_permutation_invariant(self):
        rng = np.random.default_rng(0)
        px = rng.choice([0, 255], size=(16, 16, 3)).astype(np.uint8)
        flat = px.reshape(-1, 3)
        shuffled = flat[rng.permutation(len(flat))].reshape(16, 16, 3)
        assert (salient_pixel_count(Image(16, 16, px), RED)
                == salient_pixel_count(Image(16, 16, shuffled), RED))


class TestLandscapes:
    def test_peak_value(self):
        assert gaussian_landscape_score(PEAK, PEAK, 2.0) == 1.01

    def test_one_length_scale_away(self):
        pose = generate_pose((0, 2.0, 0), (0, 0, -1), (0, 1, 0))
        # exp(-0.5) + 0.01
        assert gaussian_landscape_score(pose, PEAK, 2.0) == pytest.approx(0.6165306597126334,
                                                                          abs=1e-12)

    def test_angle_contributes(self):
        pose = generate_pose((0, 0, 0), (1, 0, -1), (0, 1, 0))
        expected = math.exp(-(math.pi / 4) ** 2 / 2) + 0.01
        assert gaussian_landscape_score(pose, PEAK, 1.0) == pytest.approx(expected, abs=1e-12)

    def test_monotone_in_origin_distance(self):
        values = [gaussian_landscape_score(generate_pose((d, 0, 0), (0, 0, -1), (0, 1, 0)),
                                           PEAK, 1.0) for d in np.linspace(0, 5, 50)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_single_peak_reduces_to_gaussian(self):
        pose = generate_pose((0.3, -0.2, 0.5), (0.1, 0, -1), (0, 1, 0))
        assert (multimodal_landscape_score(pose, [(PEAK, 1.0)], 1.3)
                == gaussian_landscape_score(pose, PEAK, 1.3))

    def test_equal_peaks(self):
        other = generate_pose((10, 0, 0), (0, 0, -1), (0, 1, 0))
        peaks = [(PEAK, 0.7), (other, 0.7)]
        assert multimodal_landscape_score(PEAK, peaks) == pytest.approx(0.71, abs=1e-15)
        assert multimodal_landscape_score(other, peaks) == pytest.approx(0.71, abs=1e-15)

    def test_dominant_peak_is_global_optimum(self):
        minor = generate_pose((10, 0, 0), (0, 0, -1), (0, 1, 0))
        peaks = [(PEAK, 1.0), (minor, 0.5)]
        assert multimodal_landscape_score(PEAK, peaks) > multimodal_landscape_score(minor, peaks)

    def test_empty_peaks(self):
        with pytest.raises(EmptyPeaks):
            multimodal_landscape_score(PEAK, [])
        with pytest.raises(EmptyPeaks):
            multimodal_scorer([])

    @settings(max_examples=200)
    @given(st.lists(st.floats(-50, 50), min_size=6, max_size=6))
    def test_always_positive(self, xs):
        try:
            pose = generate_pose(xs[:3], xs[3:], (0, 1, 0))
        except Exception:
            return
        assert multimodal_landscape_score(pose, [(PEAK, 1.0)], 0.5) > 0


class TestScorerWrappers:
    def test_rejects_non_positive(self):
        s = Scorer("zero", lambda img: 0.0)
        with pytest.raises(ScorerError):
            s(solid_image(2, 2, RED))

    def test_rejects_nan(self):
        s = PoseScorer("nan", lambda pose: float("nan"))
        with pytest.raises(ScorerError):
            s(PEAK)

    def test_deterministic(self):
        s = salient_scorer(RED)
        img = solid_image(8, 8, RED)
        assert s(img) == s(img) == 65.0


SCORER_SCRIPT = """
import base64, json, sys
req = json.loads(sys.stdin.readline())
px = base64.b64decode(req["pixels_b64"])
assert len(px) == req["width"] * req["height"] * 3
reds = sum(1 for i in range(0, len(px), 3) if px[i:i+3] == b"\\xff\\x00\\x00")
print(json.dumps({"score": reds + 0.5}))
"""


class TestExternalScorer:
    def test_protocol(self, tmp_path):
        script = tmp_path / "scorer.py"
        script.write_text(SCORER_SCRIPT)
        s = ExternalScorer([sys.executable, str(script)])
        assert s(solid_image(3, 2, RED)) == 6.5

    def test_request_encoding(self):
        line = ExternalScorer.encode_request(solid_image(1, 1, RED))
        assert line.endswith("\n") and '"pixels_b64": "/wAA"' in line

    @pytest.mark.parametrize("reply", ['{"score": "high"}', '{"score": -1}', '{"score": 0}',
                                       "not json", '{"value": 3}', ""])
    def test_bad_responses(self, reply):
        with pytest.raises(ScorerError):
            ExternalScorer.decode_response(reply)

    def test_failing_command(self, tmp_path):
        s = ExternalScorer([sys.executable, "-c", "import sys; sys.exit(4)"])
        with pytest.raises(ScorerError, match="exited with 4"):
            s(solid_image(1, 1, RED))
