"""Shared builders for stimulus catalogs and synthetic responses.

Catalogs built here carry synthetic Condition records (no actual encoding),
which is all the triplet/scheduling/scaling layers ever look at.
"""

from lfstudy import BITRATE_LADDER, Condition, EncodingMethod, Stimulus
from lfstudy.lightfield import classify_view


def make_condition(codec, method, bpp, achieved=None):
    return Condition(
        codec=codec,
        method=EncodingMethod(method),
        target_bitrate_bpp=bpp,
        achieved_bitrate_bpp=bpp * 0.97 if achieved is None else achieved,
        wall_clock_s=0.0,
    )


def make_stimuli(
    content="seagull",
    view=(0, 0),
    ladder=BITRATE_LADDER,
    codecs=("pleno", "vvc"),
    methods=("full5x5", "sparse3x3"),
):
    """Reference plus every (codec, method, bitrate) rendering of one view."""
    vtype = classify_view(*view)
    stimuli = [
        Stimulus(
            content_id=content,
            view=view,
            view_type=vtype,
            condition=None,
            image=f"{content}/{view[0]}_{view[1]}/reference.png",
        )
    ]
    for codec in codecs:
        for method in methods:
            for bpp in ladder:
                cond = make_condition(codec, method, bpp)
                stimuli.append(
                    Stimulus(
                        content_id=content,
                        view=view,
                        view_type=vtype,
                        condition=cond,
                        image=f"{content}/{view[0]}_{view[1]}/{cond.label()}.png",
                    )
                )
    return stimuli


def make_catalog(contents=("seagull", "tram"), views=((0, 0), (0, 1), (1, 1)), **kw):
    """Multi-unit catalog: every content gets every view (one per S/X/O type
    with the default views)."""
    stimuli = []
    for content in contents:
        for view in views:
            stimuli.extend(make_stimuli(content=content, view=view, **kw))
    return stimuli


def direct_pair_stimuli(labels, content="direct", view=(0, 0)):
    """One stimulus per label, all on one unit; labels become codec names so
    Stimulus.label() sorts the same way the labels do."""
    vtype = classify_view(*view)
    ref = Stimulus(
        content_id=content,
        view=view,
        view_type=vtype,
        condition=None,
        image=f"{content}/ref.png",
    )
    coded = {}
    for lab in labels:
        cond = make_condition(lab, "full5x5", 1.0)
        coded[cond.label()] = Stimulus(
            content_id=content,
            view=view,
            view_type=vtype,
            condition=cond,
            image=f"{content}/{lab}.png",
        )
    return ref, coded
