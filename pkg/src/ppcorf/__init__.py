"""Push-pull CORF simple-cell features for grayscale images."""

from ppcorf.imagecore import (
    ImageFormatError,
    as_image,
    as_kernel,
    convolve,
    load_grayscale,
    save_map,
)
from ppcorf.lgn import DogSpec, dog_kernel, lgn_response
from ppcorf.corf import (
    ConfigurationError,
    CorfCell,
    SubUnit,
    cell_response,
    configure,
    edge_stimulus,
    orientation_superposition,
    rotate_set,
    subunit_response,
)
from ppcorf.pushpull import (
    PushPullCell,
    make_pushpull,
    pull_set,
    pushpull_response,
    shift_set,
)
from ppcorf.bank import (
    FeatureTensor,
    FilterBank,
    apply_bank,
    build_bank,
    export_tensor,
    import_tensor,
    response_stack,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "CorfCell",
    "DogSpec",
    "FeatureTensor",
    "FilterBank",
    "ImageFormatError",
    "PushPullCell",
    "SubUnit",
    "apply_bank",
    "as_image",
    "as_kernel",
    "build_bank",
    "cell_response",
    "configure",
    "convolve",
    "dog_kernel",
    "edge_stimulus",
    "export_tensor",
    "import_tensor",
    "lgn_response",
    "load_grayscale",
    "make_pushpull",
    "orientation_superposition",
    "pull_set",
    "pushpull_response",
    "response_stack",
    "rotate_set",
    "save_map",
    "shift_set",
    "subunit_response",
]
