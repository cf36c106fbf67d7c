"""State machines for the management stations and radio devices."""

from .base import (Channel, LocalContext, Message, MsgType, NodeContext, NodeIdentity, Quarantine,
                   enroll, self_enroll_rsms)
from .device import (ChannelCompartment, DeviceState, KeyInfo, Phase, decrypt_traffic,
                     device_load_fill, device_zeroize, encrypt_traffic, mark_tampered, share_role)
from .join import JoinState, handle_join_message, join_timer, net_join, start_join
from .kdms import DeliveryTrace, KdmsNode, build_tree, kdms_forward, subtree, validate_tree
from .ngdm import BatchSpec, combine_operational_keys, ngdm_generate_batch
from .packaging import KeyPackage, certificate_entry, key_entry, seal_for_recipients
from .rnms import PlanEntry, RnmsState, merge_entries, rms_sync, rnms_route
from .rsms import RsmsState, rsms_package_update

__all__ = [
    "BatchSpec", "Channel", "ChannelCompartment", "DeliveryTrace", "DeviceState", "JoinState",
    "KdmsNode", "KeyInfo", "KeyPackage", "LocalContext", "Message", "MsgType", "NodeContext",
    "NodeIdentity", "Phase", "PlanEntry", "Quarantine", "RnmsState", "RsmsState", "build_tree",
    "certificate_entry", "combine_operational_keys", "decrypt_traffic", "device_load_fill",
    "device_zeroize", "encrypt_traffic", "enroll", "handle_join_message", "join_timer",
    "kdms_forward", "key_entry", "mark_tampered", "merge_entries", "net_join",
    "ngdm_generate_batch", "rms_sync", "rnms_route", "rsms_package_update", "seal_for_recipients",
    "self_enroll_rsms", "share_role", "start_join", "subtree", "validate_tree",
]
