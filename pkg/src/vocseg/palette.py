"""VOC class names and the standard indexed color palette."""

import numpy as np

NUM_CLASSES = 21

CLASS_NAMES = [
    "background",
    "aeroplane",
    "bicycle",
    "bird",
    "boat",
    "bottle",
    "bus",
    "car",
    "cat",
    "chair",
    "cow",
    "diningtable",
    "dog",
    "horse",
    "motorbike",
    "person",
    "pottedplant",
    "sheep",
    "sofa",
    "train",
    "tvmonitor",
]

VOID_INDEX = 255


def voc_palette():
    """256x3 uint8 color map used by VOC segmentation PNGs.

    Entry i is the color for class index i; generated with the standard
    bit-reversal scheme so it matches the dataset's own mask palette.
    """
    palette = np.zeros((256, 3), dtype=np.uint8)
    for i in range(256):
        cid = i
        r = g = b = 0
        for j in range(8):
            r |= ((cid >> 0) & 1) << (7 - j)
            g |= ((cid >> 1) & 1) << (7 - j)
            b |= ((cid >> 2) & 1) << (7 - j)
            cid >>= 3
        palette[i] = (r, g, b)
    return palette
