import colorsys
import hashlib
import math
from collections import deque
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from laserweed.vision import filters
from laserweed.vision.color import color_band_mask, hsv_threshold, rgb_to_hsv
from laserweed.vision.contours import (ClassifierThresholds, Contour, classify_contours, find_contours,
                                       label)
from laserweed.vision.hough import hough_lines, select_row
from laserweed.vision.image import crop, decode_pnm, encode_pnm, read_pnm, to_gray, write_pnm
from laserweed.vision.pipeline import (Calibration, VisionConfig, detect_laser_spot, detect_rows,
                                       detect_weeds, gantry_to_pixel, green_mask, mirror_transform,
                                       pixel_to_gantry, sharpness)
from laserweed.vision.render import (CROP_RGB, LASER_RGB, SOIL_RGB, WEED_RGB, draw_disc, draw_spot,
                                     finish, render_view, row_camera)
from laserweed.world import RobotState, ScenarioSpec, generate_scenario

# -- oracles -----------------------------------------------------------------


def bfs_label(mask, conn):
    h, w = mask.shape
    lab = np.zeros((h, w), int)
    n = 0
    nb = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    if conn == 8:
        nb += [(-1, -1), (-1, 1), (1, -1), (1, 1)]
    for r in range(h):
        for c in range(w):
            if mask[r, c] and not lab[r, c]:
                n += 1
                lab[r, c] = n
                q = deque([(r, c)])
                while q:
                    y, x = q.popleft()
                    for dy, dx in nb:
                        yy, xx = y + dy, x + dx
                        if 0 <= yy < h and 0 <= xx < w and mask[yy, xx] and not lab[yy, xx]:
                            lab[yy, xx] = n
                            q.append((yy, xx))
    return lab, n


def flood_filled(component):
    """Component plus its holes: everything the outside cannot 4-reach."""
    h, w = component.shape
    outside = np.zeros((h + 2, w + 2), bool)
    wall = np.zeros((h + 2, w + 2), bool)
    wall[1:-1, 1:-1] = component
    q = deque([(0, 0)])
    outside[0, 0] = True
    while q:
        y, x = q.popleft()
        for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            yy, xx = y + dy, x + dx
            if 0 <= yy < h + 2 and 0 <= xx < w + 2 and not outside[yy, xx] and not wall[yy, xx]:
                outside[yy, xx] = True
                q.append((yy, xx))
    return ~outside[1:-1, 1:-1]


def outer_boundary_pixels(component):
    filled = np.pad(flood_filled(component), 1)
    inner = filled[1:-1, 1:-1]
    exposed = ~filled[:-2, 1:-1] | ~filled[2:, 1:-1] | ~filled[1:-1, :-2] | ~filled[1:-1, 2:]
    return {(int(r), int(c)) for r, c in zip(*np.nonzero(inner & exposed))}


def radial_sweep_perimeter(component):
    """Independent outer-boundary walk (Moore neighbourhood, Jacob's stopping rule)."""
    ring = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)]  # clockwise from N
    h, w = component.shape
    inside = lambda p: 0 <= p[0] < h and 0 <= p[1] < w and component[p]
    rr, cc = np.nonzero(component)
    start = (int(rr[0]), int(cc[0]))
    came_from = (start[0], start[1] - 1)
    path = [start]
    cur = start
    while True:
        d = ring.index((came_from[0] - cur[0], came_from[1] - cur[1]))
        step = None
        for k in range(1, 9):
            cand = (cur[0] + ring[(d + k) % 8][0], cur[1] + ring[(d + k) % 8][1])
            if inside(cand):
                step = cand
                back = ring[(d + k - 1) % 8]
                came_from = (cur[0] + back[0], cur[1] + back[1])
                break
        if step is None:
            return 0.0, path
        if cur == start and len(path) > 1 and step == path[1]:
            break
        path.append(step)
        cur = step
    loop = path[:-1]
    length = sum(math.sqrt(2) if a[0] != b[0] and a[1] != b[1] else 1.0
                 for a, b in zip(loop, loop[1:] + loop[:1]))
    return (length if len(loop) > 1 else 0.0), loop


def brute_correlate(img, kernel2d):
    kh, kw = kernel2d.shape
    p = np.pad(img.astype(np.float64), ((kh // 2,) * 2, (kw // 2,) * 2), mode="reflect")
    out = np.zeros(img.shape)
    for r in range(img.shape[0]):
        for c in range(img.shape[1]):
            out[r, c] = (p[r:r + kh, c:c + kw] * kernel2d).sum()
    return out


# -- colour ---------------------------------------------------------------------


@given(st.tuples(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255)))
def test_hsv_matches_colorsys(rgb):
    h, s, v = colorsys.rgb_to_hsv(*(c / 255 for c in rgb))
    got = rgb_to_hsv(np.array([[rgb]], dtype=np.uint8))[0, 0]
    assert got[2] == max(rgb)
    # colorsys works on c / 255 and can land just beside an exact .5; round the exact ratio instead
    exact = Fraction(max(rgb) - min(rgb), max(rgb)) * 255 if max(rgb) else Fraction(0)
    assert got[1] == math.floor(exact + Fraction(1, 2))
    assert abs(int(got[1]) - s * 255) <= 0.5 + 1e-9
    if s > 0:
        assert abs(int(got[0]) - math.floor(h * 255 + 0.5) % 256) <= 1 or h * 255 > 254.5


def test_lookup_mask_equals_direct_threshold():
    rng = np.random.default_rng(3)
    img = rng.integers(0, 256, (64, 64, 3), dtype=np.uint8)
    img[:8] = WEED_RGB
    cfg = VisionConfig()
    direct = hsv_threshold(rgb_to_hsv(img), cfg.hsv_lo, cfg.hsv_hi)
    assert np.array_equal(green_mask(img, cfg), direct)


def test_scene_colours_are_separated():
    cols = np.array([[SOIL_RGB, CROP_RGB, WEED_RGB, LASER_RGB]], dtype=np.uint8)
    mask = green_mask(cols)[0]
    assert list(mask) == [0, 255, 255, 0]
    assert list(color_band_mask(cols, LASER_RGB, 12)[0]) == [False, False, False, True]


# -- filters ----------------------------------------------------------------------


def test_gaussian_matches_brute_force():
    rng = np.random.default_rng(0)
    img = rng.random((17, 23))
    k = filters.gaussian_kernel(1.4, 5)
    assert k.sum() == pytest.approx(1.0)
    assert np.allclose(filters.gaussian_blur(img, 1.4, 5), brute_correlate(img, np.outer(k, k)), atol=1e-12)
    u8 = rng.integers(0, 256, (17, 23), dtype=np.uint8)
    ref = np.clip(np.floor(brute_correlate(u8, np.outer(k, k)) + 0.5), 0, 255)
    assert np.abs(filters.gaussian_blur(u8).astype(int) - ref).max() <= 1


def test_sobel_matches_brute_force():
    rng = np.random.default_rng(1)
    img = rng.integers(0, 256, (12, 15), dtype=np.uint8)
    kx = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], float)
    gx, gy = filters.sobel(img)
    assert np.array_equal(gx, brute_correlate(img, kx))
    assert np.array_equal(gy, brute_correlate(img, kx.T))


@pytest.mark.parametrize("length", [1.0, 2.5, 5.0, 7.3, 40.0])
def test_box_blur_matches_kernel(length):
    rng = np.random.default_rng(2)
    img = rng.random((9, 60))
    k = filters.box_kernel(length)
    assert k.sum() == pytest.approx(1.0)
    assert np.allclose(filters.box_blur(img, length, axis=1), filters.convolve1d(img, k, axis=1), atol=1e-9)


def test_morphology_matches_brute_force():
    rng = np.random.default_rng(4)
    m = rng.random((20, 20)) < 0.3
    kern = filters.rect_kernel(3, 5)
    p_d = np.pad(m, ((1, 1), (2, 2)), constant_values=False)
    p_e = np.pad(m, ((1, 1), (2, 2)), constant_values=True)
    dil = np.array([[p_d[r:r + 3, c:c + 5].any() for c in range(20)] for r in range(20)])
    ero = np.array([[p_e[r:r + 3, c:c + 5].all() for c in range(20)] for r in range(20)])
    assert np.array_equal(filters.dilate(m, kern) > 0, dil)
    assert np.array_equal(filters.erode(m, kern) > 0, ero)
    closed = filters.closing(m, kern) > 0
    assert (closed | ~m).all()  # closing is extensive
    with pytest.raises(ValueError):
        filters.dilate(m, filters.rect_kernel(2))


def test_canny_disc_edges_lie_on_the_circle():
    cy, cx, radius = 40.3, 38.7, 20.0
    yy, xx = np.mgrid[:80, :80]
    disc = np.where((yy - cy) ** 2 + (xx - cx) ** 2 <= radius ** 2, 255, 0).astype(np.uint8)
    edges = filters.canny(filters.gaussian_blur(disc))
    ey, ex = np.nonzero(edges)
    assert len(ey) > 2 * math.pi * radius * 0.8
    assert np.abs(np.hypot(ey - cy, ex - cx) - radius).max() <= 1.0
    assert set(np.unique(edges)) == {0, 255}


def test_canny_blank_and_bad_thresholds():
    assert not filters.canny(np.full((10, 10), 7, np.uint8)).any()
    with pytest.raises(ValueError):
        filters.canny(np.zeros((4, 4), np.uint8), 100, 50)


# -- labelling and contours -----------------------------------------------------


def test_label_matches_bfs():
    rng = np.random.default_rng(0)
    for _ in range(60):
        m = rng.random((rng.integers(1, 30), rng.integers(1, 30))) < rng.uniform(0.2, 0.7)
        for conn in (4, 8):
            a, na = label(m, conn)
            b, nb = bfs_label(m, conn)
            assert na == nb and np.array_equal(a, b)


def test_contours_match_flood_fill_oracles():
    rng = np.random.default_rng(11)
    for _ in range(100):
        m = rng.random((64, 64)) < rng.uniform(0.05, 0.6)
        labels, n = bfs_label(m, 8)
        contours = find_contours(m)
        assert len(contours) == n
        for c in contours:
            rr, cc = np.nonzero(labels == c.label)
            r0, c0 = rr.min(), cc.min()
            comp = labels[r0:rr.max() + 1, c0:cc.max() + 1] == c.label
            ys, xs = np.nonzero(flood_filled(comp))
            ys, xs = ys + r0, xs + c0
            assert c.area_px2 == len(ys)
            assert c.centroid == (xs.sum() / len(xs), ys.sum() / len(ys))
            assert set(c.boundary) == {(r + r0, q + c0) for r, q in outer_boundary_pixels(comp)}
            length, _ = radial_sweep_perimeter(comp)
            assert c.perimeter_px == pytest.approx(length, abs=1e-9)


def test_square_contour():
    m = np.zeros((10, 10), bool)
    m[2:6, 3:8] = True
    m[3, 4] = False  # hole is filled for area
    (c,) = find_contours(m)
    assert c.area_px2 == 20
    assert c.perimeter_px == 14
    assert c.bbox == (3, 2, 5, 4)
    assert not c.touches_border
    assert c.centroid == (5.0, 3.5)


def _fake(area, perim, k):
    return Contour(boundary=(), area_px2=area, perimeter_px=perim, centroid=(0.0, 0.0), label=k,
                   touches_border=False, bbox=(0, 0, 1, 1))


def test_classifier_example():
    cs = classify_contours([_fake(1000, 120, 1), _fake(100, 40, 2), _fake(5, 2, 3)])
    assert [c.cls for c in cs] == ["crop", "weed", "noise"]
    assert classify_contours([]) == []
    with pytest.raises(ValueError):
        ClassifierThresholds(noise_frac=0.7, crop_frac=0.6)


def test_weed_centroid_on_rendered_ellipse():
    img = np.empty((240, 320, 3), np.uint8)
    img[:] = SOIL_RGB
    yy, xx = np.mgrid[:240, :320]
    img[((xx - 80.0) / 40) ** 2 + ((yy - 120.0) / 30) ** 2 <= 1] = CROP_RGB
    img[((xx - 211.4) / 9) ** 2 + ((yy - 95.6) / 6) ** 2 <= 1] = WEED_RGB
    det = detect_weeds(img)
    assert det.count == 1
    x, y = det.centroids[0]
    assert math.hypot(x - 211.4, y - 95.6) <= 1.0


def test_border_contours_stay_unclassified():
    img = np.empty((120, 160, 3), np.uint8)
    img[:] = SOIL_RGB
    draw_disc(img, (0.0, 60.0), 20, CROP_RGB)
    draw_disc(img, (100.0, 60.0), 12, CROP_RGB)
    draw_disc(img, (60.0, 20.0), 4, WEED_RGB)
    det = detect_weeds(img)
    cut = [c for c in det.contours if c.touches_border]
    assert cut and all(c.cls == "unclassified" for c in cut)
    assert det.count == 1


# -- Hough ----------------------------------------------------------------------------


def _line_pixels(shape, center, angle_deg, offset_px=0.0):
    h, w = shape
    img = np.zeros(shape, np.uint8)
    a = math.radians(angle_deg)
    cx, cy = center
    for t in np.arange(-400, 400, 0.25):
        x = cx - offset_px * math.cos(a) - t * math.sin(a)
        y = cy + offset_px * math.sin(a) - t * math.cos(a)
        r, c = int(round(y)), int(round(x))
        if 0 <= r < h and 0 <= c < w:
            img[r, c] = 255
    return img


@pytest.mark.parametrize("angle", range(-30, 31, 5))
def test_hough_recovers_row_angle(angle):
    edges = _line_pixels((200, 240), (119.5, 120.0), angle)
    rows = hough_lines(edges, votes_min=60, center=(119.5, 120.0))
    best = select_row(rows)
    assert abs(best.angle_deg - angle) <= 1.0
    assert abs(best.distance_from_center_px) <= 1.0


def test_hough_signs_and_spacing():
    edges = _line_pixels((200, 240), (119.5, 99.5), 0.0, offset_px=50) | \
        _line_pixels((200, 240), (119.5, 99.5), 0.0, offset_px=-50)
    rows = hough_lines(edges, votes_min=60)
    assert len(rows) == 2
    assert rows[0].distance_from_center_px == pytest.approx(50, abs=1)
    assert rows[1].distance_from_center_px == pytest.approx(-50, abs=1)
    assert rows[0].inter_row_spacing_px == pytest.approx(100, abs=1)
    assert hough_lines(np.zeros((50, 50), np.uint8)) == []
    assert select_row([]) is None


def test_short_second_border_still_centres_the_row():
    edges = np.zeros((200, 240), np.uint8)
    edges[130:200, 100] = 255
    edges[160:200, 116] = 255  # the other border of the strip is only 40 px long
    lone = hough_lines(edges, votes_min=60, merge_rho_px=25)
    paired = hough_lines(edges, votes_min=60, merge_rho_px=25, partner_votes_min=30)
    assert [r.distance_from_center_px for r in lone] == pytest.approx([19.5], abs=0.5)
    assert len(paired) == 1 and 12.0 < paired[0].distance_from_center_px < 19.5
    # a weak line alone is not a row
    assert hough_lines(edges[:, 110:], votes_min=60, merge_rho_px=25, partner_votes_min=30) == []


@pytest.mark.parametrize("yaw", [-25, -8, 0, 8, 25])
def test_detect_rows_on_rendered_field(yaw):
    world = generate_scenario(ScenarioSpec(row_length_m=4.0, weed_density_per_m2=0.0), 0)
    row = world.rows[0]
    cam = row_camera(pixel_noise_sigma=0.0)
    robot = RobotState(position=(row.start[0] + 1.0, row.start[1]), heading_rad=math.radians(yaw))
    img = render_view(world, robot, cam, None, speed_cm_s=0.0)
    center = tuple(cam.robot_to_pixel(np.array([[0.0, 0.0]]))[0])
    best = select_row(detect_rows(img, center=center))
    # a robot yawed left sees the row lean right
    assert best.angle_deg == pytest.approx(-yaw, abs=1.0)
    assert abs(best.distance_from_center_px) <= 2.0


# -- laser spot and geometry ----------------------------------------------------------


@pytest.mark.parametrize("center", [(40.0, 30.0), (40.3, 29.6), (12.75, 50.2)])
def test_spot_centroid_sub_pixel(center):
    ref = np.empty((64, 80, 3), np.uint8)
    ref[:] = SOIL_RGB
    draw_disc(ref, (60.0, 10.0), 6, CROP_RGB)  # foliage is ignored
    img = ref.copy()
    draw_spot(img, center, 1.6)
    got = detect_laser_spot(img, reference=ref)
    assert math.hypot(got[0] - center[0], got[1] - center[1]) <= 0.5
    coarse = detect_laser_spot(img)
    assert math.hypot(coarse[0] - center[0], coarse[1] - center[1]) <= 1.0
    assert detect_laser_spot(ref) is None


@given(st.floats(0, 479), st.floats(0, 639))
def test_mirror_is_involution(y, x):
    assert mirror_transform(mirror_transform((x, y), 480), 480) == pytest.approx((x, y))


def test_mirror_examples():
    assert mirror_transform((10, 0), 100) == (10, 99)
    assert mirror_transform((3, 50), 101) == (3, 50)


@given(st.floats(-10, 700), st.floats(-10, 500))
def test_pixel_gantry_round_trip(x, y):
    cal = Calibration(offset_mm=(1.5, -2.0))
    gx, gy, gz = pixel_to_gantry((x, y), cal)
    assert gz == 0.0
    assert gantry_to_pixel((gx, gy), cal) == pytest.approx((x, y), abs=1e-9)


def test_pixel_zero_maps_to_half_pixel():
    assert pixel_to_gantry((0, 0)) == (0.3125, 0.3125, 0.0)


def test_motion_blur_lowers_sharpness():
    img = np.empty((60, 80, 3), np.uint8)
    img[:] = SOIL_RGB
    draw_disc(img, (40, 30), 10, WEED_RGB)
    cam = row_camera(pixel_noise_sigma=0.0, motion_blur_px_per_cmps=0.45)
    still = sharpness(finish(img, cam, 0.0, None))
    moving = sharpness(finish(img, cam, 40.0, None))
    assert moving < still


# -- raster I/O ------------------------------------------------------------------


def test_pnm_golden_bytes(tmp_path):
    gray = np.arange(12, dtype=np.uint8).reshape(3, 4)
    assert encode_pnm(gray) == b"P5\n4 3\n255\n" + bytes(range(12))
    rgb = np.zeros((1, 2, 3), np.uint8)
    rgb[0, 1] = (1, 2, 3)
    assert encode_pnm(rgb) == b"P6\n2 1\n255\n\x00\x00\x00\x01\x02\x03"
    write_pnm(tmp_path / "a.ppm", rgb)
    assert np.array_equal(read_pnm(tmp_path / "a.ppm"), rgb)
    assert np.array_equal(decode_pnm(b"P5 # note\n4 3\n255\n" + bytes(range(12))), gray)


def test_pnm_errors():
    with pytest.raises(ValueError):
        decode_pnm(b"P3\n1 1\n255\n0 0 0")
    with pytest.raises(ValueError):
        decode_pnm(b"P5\n4 3\n255\n\x00")
    with pytest.raises(ValueError):
        decode_pnm(b"P5\n1 1\n65535\n\x00\x00")
    with pytest.raises(TypeError):
        encode_pnm(np.zeros((2, 2), np.float32))


def test_crop_and_gray():
    img = np.arange(60, dtype=np.uint8).reshape(5, 4, 3)
    assert crop(img, (1, 2, 2, 3)).shape == (3, 2, 3)
    assert crop(img, None) is img
    with pytest.raises(ValueError):
        crop(img, (3, 0, 2, 1))
    assert to_gray(np.array([[[255, 255, 255], [0, 0, 0]]], np.uint8)).tolist() == [[255, 0]]


def test_rendered_frame_is_reproducible():
    world = generate_scenario(ScenarioSpec(row_length_m=2.0), 5)
    robot = RobotState(position=(2.0, 0.25))
    cam = row_camera()
    a = render_view(world, robot, cam, np.random.default_rng(9), speed_cm_s=0.0)
    b = render_view(world, robot, cam, np.random.default_rng(9), speed_cm_s=0.0)
    assert hashlib.sha256(a.tobytes()).digest() == hashlib.sha256(b.tobytes()).digest()
