"""Published coefficient lists used as fixtures (innermost polynomial first).

Each entry maps a label to (delta the list was designed for, list of
coefficient tuples in increasing degree).
"""

MUON = (3.4445, -4.7750, 2.0315)

LISTS = {
    "muon_x5": (0.3, [MUON] * 5),
    "cans_d0.3_o3_x7": (0.3, [
        (5.181702879894027, -5.177039351076183),
        (2.5854225645668487, -0.6478627820075661),
        (2.565592012027513, -0.6452645701961278),
        (2.5162233474315263, -0.6387826202434335),
        (2.401068707564606, -0.6235851252726741),
        (2.1708447617901196, -0.5928497805346629),
        (1.8394377168195162, -0.5476683622291173),
    ]),
    "cans_d0.3_o5_x5": (0.3, [
        (8.492217149995927, -25.194520609944842, 18.698048862325017),
        (4.219515965675824, -3.1341586924049167, 0.5835102469062495),
        (4.102486923388631, -3.0527342942729288, 0.5742243021935801),
        (3.6850049522776493, -2.756862315006488, 0.5405198817097779),
        (2.734387280007103, -2.036641382834855, 0.4592314693659632),
    ]),
    "cans_d0.00188_o3_x9": (0.00188, [
        (5.179622107852338, -5.174287102735334),
        (2.5836099434139492, -0.6476254200945953),
        (2.5610021062961206, -0.6446627537769272),
        (2.505058237036672, -0.6373139418181356),
        (2.3764825571306125, -0.6203257475007262),
        (2.1279007426858794, -0.5870609391939776),
        (1.7930526112541054, -0.5412446350453286),
        (1.5582262242936464, -0.5082920767544266),
        (1.5021988305175455, -0.5003140810786916),
    ]),
    "cans_d0.00443_o3_x9": (0.00443, [
        (5.182503604966906, -5.178098480082684),
        (2.586120737395915, -0.6479542005271643),
        (2.567364126726186, -0.6454968804392178),
        (2.520560084348265, -0.6393528082067044),
        (2.410759275435182, -0.6248683598710716),
        (2.1883348130094173, -0.5952022073798908),
        (1.8595760874873613, -0.5504490972723968),
        (1.589020160467417, -0.5126569802066718),
        (1.5051653981684994, -0.5007377068751799),
    ]),
    "cans_d0.0035_o3_x9": (0.0035, [
        (5.181724335835382, -5.177067731075524),
        (2.585441267930541, -0.6478652310697918),
        (2.5656394547047783, -0.6452707898813249),
        (2.5163392603382473, -0.6387978622974516),
        (2.401326686185833, -0.6236192975654269),
        (2.17130618635129, -0.5929118810597139),
        (1.8399595521688579, -0.5477404797274893),
        (1.5792011481985957, -0.5112666878668612),
        (1.5040821254913361, -0.500583031372834),
    ]),
    "cans_d0.3_o5_x4": (0.3, [
        (8.420293602126344, -24.910491192120688, 18.472094206318726),
        (4.101228661246281, -3.0518555467946813, 0.5741241025302702),
        (3.6809819251109155, -2.75396502307162, 0.5401902781108926),
        (2.7280916801566666, -2.0315492757300913, 0.45866431681858805),
    ]),
    "jiacheng_o5_x6": (None, [
        (3955 / 1024, -8306 / 1024, 5008 / 1024),
        (3735 / 1024, -6681 / 1024, 3463 / 1024),
        (3799 / 1024, -6499 / 1024, 3211 / 1024),
        (4019 / 1024, -6385 / 1024, 2906 / 1024),
        (2677 / 1024, -3029 / 1024, 1162 / 1024),
        (2172 / 1024, -1833 / 1024, 682 / 1024),
    ]),
}

CANS_LISTS = [k for k in LISTS if k.startswith("cans_")]
