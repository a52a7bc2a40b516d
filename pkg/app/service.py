from modules.blur.services import BlurService
from modules.center_estimation.baselines import BaselineEstimationService
from modules.center_estimation.services import GeometricIdentificationService
from modules.deconvolution.services import DeconvolutionService
from modules.experiments.services import ExperimentService
from modules.imaging.image_io import ImageFileService
from modules.imaging.services import ImagingService
from modules.rig.services import RigService
from modules.rings.services import RingTransformService

# Initialize services
imaging_service = ImagingService()
file_service = ImageFileService()
ring_service = RingTransformService(imaging=imaging_service)

blur_service = BlurService(imaging=imaging_service)
deconvolution_service = DeconvolutionService(rings=ring_service)
rig_service = RigService(files=file_service)
identification_service = GeometricIdentificationService()
baseline_service = BaselineEstimationService(rings=ring_service)

experiment_service = ExperimentService(
    imaging=imaging_service,
    blur=blur_service,
    deconvolution=deconvolution_service,
    rigs=rig_service,
    identification=identification_service,
    baselines=baseline_service,
)
