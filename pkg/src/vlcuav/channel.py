"""Lambertian VLC link model for a photodiode-equipped UAV above LED ground users.

Geometry: the UAV receiver faces straight down and every ground LED points
straight up, so irradiance and incidence angles coincide and
cos(phi) = cos(psi) = h / d with d = sqrt(h^2 + d_xy^2).

Channel gain (within the receiver field of view):

    H = (m + 1) * A * g(psi) / (2*pi) * h^(m+1) / (h^2 + d_xy^2)^((m+3)/2)

and H = 0 outside the field of view.  Capacity of the optical link:

    C = 1/2 * log2(1 + (e / 2*pi) * (xi * P * H / sigma_w)^2)

All lengths in meters, areas in m^2, powers in watts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, InvalidParameterError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class VlcParams:
    """Photometric and radio constants of one UAV/GU link class.

    semi_angle_half_power : transmitter semi-angle at half power, radians
    fov_half_angle        : receiver field-of-view half angle, radians
    detector_area         : photodiode detector area, m^2
    refractive_index      : concentrator refractive index (>= 1)
    illumination_response : LED illumination response factor, (0, 1]
    tx_power              : GU transmit power, W
    noise_std             : AWGN standard deviation, W
    capacity_threshold    : minimum link capacity for a successful serve, bit/s/Hz
    """

    semi_angle_half_power: float
    fov_half_angle: float
    detector_area: float
    refractive_index: float
    illumination_response: float
    tx_power: float
    noise_std: float
    capacity_threshold: float

    def __post_init__(self):
        if not 0.0 < self.semi_angle_half_power < math.pi / 2:
            raise InvalidParameterError(
                f"semi_angle_half_power must be in (0, pi/2), got {self.semi_angle_half_power}"
            )
        if not 0.0 < self.fov_half_angle < math.pi / 2:
            raise InvalidParameterError(
                f"fov_half_angle must be in (0, pi/2), got {self.fov_half_angle}"
            )
        if self.detector_area <= 0.0:
            raise InvalidParameterError("detector_area must be positive")
        if self.refractive_index < 1.0:
            raise InvalidParameterError("refractive_index must be >= 1")
        if not 0.0 < self.illumination_response <= 1.0:
            raise InvalidParameterError("illumination_response must be in (0, 1]")
        if self.tx_power <= 0.0:
            raise InvalidParameterError("tx_power must be positive")
        if self.noise_std <= 0.0:
            raise InvalidParameterError("noise_std must be positive")
        if self.capacity_threshold <= 0.0:
            raise InvalidParameterError("capacity_threshold must be positive")
        if lambertian_order(self) < 1.0 - 1e-12:
            raise InvalidParameterError(
                "lambertian order below 1 (semi-angle at half power exceeds 60 degrees)"
            )


@dataclass(frozen=True)
class LinkGeometry:
    """Vertical-alignment link: UAV at altitude h, GU at horizontal offset d_xy."""

    altitude: float
    horizontal_distance: float

    def __post_init__(self):
        if self.altitude < 0.0:
            raise InvalidParameterError("altitude must be >= 0")
        if self.horizontal_distance < 0.0:
            raise InvalidParameterError("horizontal_distance must be >= 0")

    @property
    def slant_distance(self) -> float:
        return math.hypot(self.altitude, self.horizontal_distance)


def noise_std_from_dbm(noise_power_dbm: float) -> float:
    """Convert a noise *power* in dBm to the linear amplitude sigma_w in watts."""
    return math.sqrt(10.0 ** ((noise_power_dbm - 30.0) / 10.0))


def from_physical(
    semi_angle_deg: float,
    fov_deg: float,
    detector_area_cm2: float,
    refractive_index: float,
    illumination_response: float,
    tx_power_w: float,
    noise_power_dbm: float,
    capacity_threshold: float,
) -> VlcParams:
    """Build VlcParams from the units used in configuration files (deg, cm^2, dBm)."""
    return VlcParams(
        semi_angle_half_power=math.radians(semi_angle_deg),
        fov_half_angle=math.radians(fov_deg),
        detector_area=detector_area_cm2 * 1e-4,
        refractive_index=refractive_index,
        illumination_response=illumination_response,
        tx_power=tx_power_w,
        noise_std=noise_std_from_dbm(noise_power_dbm),
        capacity_threshold=capacity_threshold,
    )


def lambertian_order(params: VlcParams) -> float:
    """m = -ln 2 / ln(cos(semi-angle at half power))."""
    c = math.cos(params.semi_angle_half_power)
    if not 0.0 < c < 1.0:
        raise InvalidParameterError("cos(semi_angle_half_power) must lie in (0, 1)")
    return -math.log(2.0) / math.log(c)


def concentrator_gain(params: VlcParams, incidence: float) -> float:
    """Optical concentrator gain g(psi): constant inside the FOV, zero outside."""
    if incidence < 0.0 or incidence > math.pi:
        raise InvalidParameterError(f"incidence angle out of [0, pi]: {incidence}")
    if incidence > params.fov_half_angle:
        return 0.0
    return params.refractive_index**2 / math.sin(params.fov_half_angle) ** 2


def channel_gain(params: VlcParams, geom: LinkGeometry) -> float:
    """Line-of-sight channel gain H for a vertically aligned link."""
    h = geom.altitude
    d_xy = geom.horizontal_distance
    if h == 0.0 and d_xy == 0.0:
        raise GeometryError("undefined geometry: transmitter and receiver coincide")
    incidence = math.atan2(d_xy, h)
    g = concentrator_gain(params, incidence)
    if g == 0.0:
        return 0.0
    m = lambertian_order(params)
    return (
        (m + 1.0)
        * params.detector_area
        * g
        / TWO_PI
        * h ** (m + 1.0)
        / (h * h + d_xy * d_xy) ** ((m + 3.0) / 2.0)
    )


def gain_at_offsets(params: VlcParams, altitude: float, d_xy: np.ndarray) -> np.ndarray:
    """Vectorized channel gain over an array of horizontal offsets at fixed altitude.

    Matches channel_gain() element-wise; used by the environment inner loop.
    """
    if altitude <= 0.0:
        raise GeometryError("altitude must be positive for a gain profile")
    d_xy = np.asarray(d_xy, dtype=np.float64)
    m = lambertian_order(params)
    g = concentrator_gain(params, 0.0)
    coeff = (m + 1.0) * params.detector_area * g / TWO_PI
    gains = coeff * altitude ** (m + 1.0) / (altitude**2 + d_xy**2) ** ((m + 3.0) / 2.0)
    return np.where(d_xy <= altitude * math.tan(params.fov_half_angle), gains, 0.0)


def capacity(params: VlcParams, gain: float) -> float:
    """Link capacity in bit/s/Hz for a given channel gain."""
    if gain < 0.0:
        raise InvalidParameterError("channel gain must be >= 0")
    snr_term = (
        math.e
        / TWO_PI
        * (params.illumination_response * params.tx_power * gain / params.noise_std) ** 2
    )
    return 0.5 * math.log2(1.0 + snr_term)


def gain_threshold(params: VlcParams) -> float:
    """Channel gain at which capacity equals the configured capacity threshold."""
    return (
        params.noise_std
        / (params.illumination_response * params.tx_power)
        * math.sqrt(TWO_PI / math.e * (2.0 ** (2.0 * params.capacity_threshold) - 1.0))
    )


def radius_coeff(params: VlcParams) -> float:
    """Coefficient of the squared-radius power law ((m+1) A g / (2 pi H_th))^(2/(m+3)).

    With this coefficient, the squared horizontal distance at which the gain
    crosses its threshold is coeff * h^(2(m+1)/(m+3)) - h^2.
    """
    m = lambertian_order(params)
    g = concentrator_gain(params, 0.0)
    h_th = gain_threshold(params)
    return ((m + 1.0) * params.detector_area * g / (TWO_PI * h_th)) ** (2.0 / (m + 3.0))


def comm_radius(params: VlcParams, altitude: float) -> float:
    """Horizontal distance inside which a GU can be successfully served.

    Zero when even the overhead link is below threshold; capped by the FOV.
    """
    if altitude <= 0.0:
        raise InvalidParameterError("altitude must be positive")
    m = lambertian_order(params)
    coeff = radius_coeff(params)
    squared = coeff * altitude ** (2.0 * (m + 1.0) / (m + 3.0)) - altitude**2
    if squared <= 0.0:
        return 0.0
    return min(math.sqrt(squared), altitude * math.tan(params.fov_half_angle))


def reception_radius(params: VlcParams, altitude: float) -> float:
    """Horizontal distance at which light is still physically received (FOV edge)."""
    if altitude <= 0.0:
        raise InvalidParameterError("altitude must be positive")
    return altitude * math.tan(params.fov_half_angle)
