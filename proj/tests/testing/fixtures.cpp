#include "testing/fixtures.hpp"

namespace cscdet::testing {

namespace {

Annotation person(double x, double y, double h, bool ignore = false)
{
    Annotation a;
    a.box = {x, y, h / 2, h};
    a.ignore = ignore;
    return a;
}

Detection det(double x, double y, double h, double score)
{
    return {{x, y, h / 2, h}, score, 1.0};
}

} // namespace

EvalFixture ten_image_fixture()
{
    EvalFixture f;
    f.dets.resize(10);
    f.annos.resize(10);

    // 0: two people, both found, plus a duplicate on the first.
    f.annos[0] = {person(10, 10, 120), person(200, 20, 100)};
    f.dets[0] = {det(12, 12, 118, 4.0), det(202, 18, 102, 2.5), det(16, 14, 110, 1.0)};
    // 1: one person found late, one background hit.
    f.annos[1] = {person(50, 40, 160)};
    f.dets[1] = {det(300, 40, 140, 3.0), det(52, 44, 156, 0.5)};
    // 2: a short person (ignored) with a detection on it, and a required person missed.
    f.annos[2] = {person(20, 20, 45), person(150, 30, 90)};
    f.dets[2] = {det(20, 20, 46, 3.5)};
    // 3: an occluded person (visibility 0.5 -> ignore), detected.
    {
        Annotation a = person(60, 60, 140);
        a.visible = Box{60, 60, 70, 70};
        f.annos[3] = {a};
        f.dets[3] = {det(62, 62, 136, 2.0)};
    }
    // 4: a cyclist (non-person label) and a person; detections on both, score tie with image 0.
    {
        Annotation c = person(10, 10, 150);
        c.label = "cyclist";
        f.annos[4] = {c, person(200, 40, 130)};
        f.dets[4] = {det(12, 10, 148, 2.5), det(204, 44, 126, 1.5)};
    }
    // 5: empty image with two false positives, one too short to count.
    f.dets[5] = {det(0, 0, 120, 1.5), det(100, 0, 30, 5.0)};
    // 6: a person found with a poor box (IoU below 0.5) and an explicitly ignored crowd region.
    f.annos[6] = {person(100, 100, 120), person(0, 0, 200, true)};
    f.dets[6] = {det(130, 100, 120, 0.8), det(2, 2, 196, 2.2)};
    // 7: two overlapping people, both detected.
    f.annos[7] = {person(100, 50, 150), person(140, 50, 150)};
    f.dets[7] = {det(138, 52, 148, 1.2), det(102, 50, 150, 0.9)};
    // 8: nothing at all.
    // 9: a person at the visibility threshold (0.65 exactly -> ignore) and a required one missed.
    {
        Annotation a = person(10, 10, 100);
        a.visible = Box{10, 10, 50, 65};
        f.annos[9] = {a, person(300, 10, 100)};
        f.dets[9] = {det(10, 10, 100, 0.2), det(120, 10, 100, 0.2)};
    }
    return f;
}

} // namespace cscdet::testing
