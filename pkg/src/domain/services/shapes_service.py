"""
Synthetic shapes corpus: coloured circles, squares and triangles with exact
ground-truth labels, boxes and segmentation maps.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence

import numpy as np
from PIL import Image, ImageDraw

from ..entities.annotated_image import AnnotatedImage, tight_box

if TYPE_CHECKING:
    from ...config.experiment_config import ShapesConfig

logger = logging.getLogger(__name__)

SHAPE_KINDS = ("circle", "square", "triangle")
PALETTE = np.array(
    [
        (230, 25, 75),
        (60, 180, 75),
        (0, 130, 200),
        (255, 225, 25),
        (245, 130, 48),
        (145, 30, 180),
        (70, 240, 240),
        (240, 50, 230),
    ],
    dtype=np.uint8,
)
BACKGROUND_GREY = 40
TEXTURE_STD = 12.0


def class_shape(class_id: int) -> str:
    return SHAPE_KINDS[class_id % len(SHAPE_KINDS)]


def class_colour(class_id: int) -> np.ndarray:
    return PALETTE[class_id // len(SHAPE_KINDS)]


def _shape_mask(kind: str, y0: int, x0: int, size: int, image_size: int) -> np.ndarray:
    canvas = Image.new("L", (image_size, image_size), 0)
    draw = ImageDraw.Draw(canvas)
    x1, y1 = x0 + size - 1, y0 + size - 1
    if kind == "circle":
        draw.ellipse([x0, y0, x1, y1], fill=1)
    elif kind == "square":
        draw.rectangle([x0, y0, x1, y1], fill=1)
    else:
        draw.polygon([(x0 + (size - 1) / 2.0, y0), (x0, y1), (x1, y1)], fill=1)
    return np.asarray(canvas, dtype=bool)


class ShapesService:
    """Corpus generation and the unbalanced split"""

    @staticmethod
    def generate_image(config: "ShapesConfig", image_id: int) -> AnnotatedImage:
        """One image, a pure function of (config, image_id)"""
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, image_id]))
        size = config.image_size
        if config.background == "solid":
            canvas = np.full((size, size, 3), BACKGROUND_GREY, dtype=np.float64)
        else:
            canvas = BACKGROUND_GREY + rng.normal(0.0, TEXTURE_STD, size=(size, size, 3))
        segmentation = np.full((size, size), config.num_classes, dtype=np.int16)
        owner = np.full((size, size), -1, dtype=np.int16)

        lo, hi = config.shapes_per_image
        count = int(rng.integers(lo, hi + 1))
        for index in range(count):
            class_id = int(rng.integers(0, config.num_classes))
            extent = int(rng.integers(config.min_shape_size, config.max_shape_size + 1))
            y0 = int(rng.integers(0, size - extent + 1))
            x0 = int(rng.integers(0, size - extent + 1))
            mask = _shape_mask(class_shape(class_id), y0, x0, extent, size)
            canvas[mask] = class_colour(class_id)
            segmentation[mask] = class_id
            owner[mask] = index

        pixels = np.clip(np.round(canvas), 0, 255) / 127.5 - 1.0
        # one box per shape that is still visible after later shapes are painted over it
        boxes = [box for box in (tight_box(owner == index) for index in range(count)) if box is not None]
        labels, areas = [], []
        for class_id in np.unique(segmentation):
            if class_id == config.num_classes:
                continue
            labels.append(int(class_id))
            areas.append(int((segmentation == class_id).sum()))

        return AnnotatedImage(
            id=image_id,
            pixels=pixels.astype(np.float32),
            gt_label=labels[int(np.argmax(areas))] if labels else None,
            gt_labels=tuple(labels),
            gt_boxes=boxes,
            gt_segmentation_map=segmentation,
            num_classes=config.num_classes,
        )

    @staticmethod
    def generate_shapes(config: "ShapesConfig", workers: int = 1) -> List[AnnotatedImage]:
        """Dense ids 0..count-1; the corpus does not depend on the worker count"""
        ids = range(config.count)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                images = list(pool.map(lambda i: ShapesService.generate_image(config, i), ids))
        else:
            images = [ShapesService.generate_image(config, i) for i in ids]
        logger.info(f"Generated {len(images)} shape images ({config.num_classes} classes)")
        return images

    @staticmethod
    def class_quotas(num_classes: int, max_per_class: int) -> List[int]:
        """floor(i * max_per_class / num_classes) images for class i"""
        return [(i * max_per_class) // num_classes for i in range(num_classes)]

    @staticmethod
    def make_unbalanced(
        dataset: Sequence[AnnotatedImage],
        max_per_class: int,
        num_classes: Optional[int] = None,
    ) -> List[AnnotatedImage]:
        """Keep the first quota images of each class by id; zero-quota classes vanish"""
        labelled = [image for image in dataset if image.gt_label is not None]
        if num_classes is None:
            known = [image.num_classes for image in labelled if image.num_classes is not None]
            num_classes = known[0] if known else max((image.gt_label for image in labelled), default=-1) + 1
        quotas = ShapesService.class_quotas(num_classes, max_per_class)
        kept: Dict[int, int] = {c: 0 for c in range(num_classes)}
        result = []
        for image in sorted(labelled, key=lambda im: im.id):
            c = image.gt_label
            if kept[c] < quotas[c]:
                kept[c] += 1
                result.append(image)
        logger.info(f"Unbalanced split keeps {len(result)} of {len(dataset)} images")
        return result

    @staticmethod
    def summary(dataset: Sequence[AnnotatedImage], num_classes: int) -> Dict[str, object]:
        """Class histogram and histogram of distinct visible classes per image"""
        class_counts = np.zeros(num_classes, dtype=np.int64)
        per_image: Dict[int, int] = {}
        for image in dataset:
            if image.gt_label is not None:
                class_counts[image.gt_label] += 1
            per_image[len(image.gt_labels)] = per_image.get(len(image.gt_labels), 0) + 1
        return {
            "count": len(dataset),
            "class_counts": class_counts.tolist(),
            "labels_per_image": {str(k): v for k, v in sorted(per_image.items())},
        }
