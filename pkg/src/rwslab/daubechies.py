"""Frozen extremal-phase orthonormal filter taps, 1..20 vanishing moments.

Generated by scripts/gen_daubechies_taps.py (spectral factorization at 60
decimal digits); do not edit by hand.  Taps are stored at 17 significant
digits so they round-trip exactly through float64.  Validity is enforced
by the filter invariant tests, not re-derived at run time.
"""

DAUBECHIES_TAPS = {
    1: (
        0.70710678118654752,
        0.70710678118654752,
    ),
    2: (
        0.48296291314453414,
        0.83651630373780791,
        0.22414386804201338,
        -0.12940952255126038,
    ),
    3: (
        0.33267055295008262,
        0.80689150931109258,
        0.45987750211849157,
        -0.13501102001025459,
        -0.085441273882026662,
        0.035226291885709537,
    ),
    4: (
        0.23037781330889650,
        0.71484657055291565,
        0.63088076792985891,
        -0.027983769416859854,
        -0.18703481171909308,
        0.030841381835560764,
        0.032883011666885200,
        -0.010597401785069032,
    ),
    5: (
        0.16010239797419291,
        0.60382926979718967,
        0.72430852843777293,
        0.13842814590132073,
        -0.24229488706638203,
        -0.032244869584638375,
        0.077571493840045714,
        -0.0062414902127982743,
        -0.012580751999081999,
        0.0033357252854737713,
    ),
    6: (
        0.11154074335010946,
        0.49462389039845309,
        0.75113390802109535,
        0.31525035170919763,
        -0.22626469396543982,
        -0.12976686756726194,
        0.097501605587323049,
        0.027522865530305729,
        -0.031582039317486030,
        0.00055384220116149614,
        0.0047772575109455106,
        -0.0010773010853084796,
    ),
    7: (
        0.077852054085009179,
        0.39653931948191731,
        0.72913209084623512,
        0.46978228740519312,
        -0.14390600392856498,
        -0.22403618499387498,
        0.071309219266830265,
        0.080612609151083072,
        -0.038029936935014414,
        -0.016574541630666881,
        0.012550998556099841,
        0.00042957797292136652,
        -0.0018016407040474909,
        0.00035371379997452025,
    ),
    8: (
        0.054415842243104010,
        0.31287159091429997,
        0.67563073629728981,
        0.58535468365420671,
        -0.015829105256349306,
        -0.28401554296154693,
        0.00047248457391328277,
        0.12874742662047846,
        -0.017369301001807546,
        -0.044088253930794752,
        0.013981027917398282,
        0.0087460940474057767,
        -0.0048703529934515743,
        -0.00039174037337694705,
        0.00067544940645056937,
        -0.00011747678412476953,
    ),
    9: (
        0.038077947363878347,
        0.24383467461259035,
        0.60482312369011111,
        0.65728807805130054,
        0.13319738582500758,
        -0.29327378327917491,
        -0.096840783222976461,
        0.14854074933810638,
        0.030725681479333379,
        -0.067632829061329974,
        0.00025094711483145196,
        0.022361662123679097,
        -0.0047232047577513973,
        -0.0042815036824634298,
        0.0018476468830562265,
        0.00023038576352319597,
        -0.00025196318894271014,
        3.9347320316271599e-5,
    ),
    10: (
        0.026670057900555554,
        0.18817680007769149,
        0.52720118893172559,
        0.68845903945360357,
        0.28117234366057746,
        -0.24984642432731538,
        -0.19594627437737704,
        0.12736934033579326,
        0.093057364603572351,
        -0.071394147166397087,
        -0.029457536821875813,
        0.033212674059341002,
        0.0036065535669561697,
        -0.010733175483330575,
        0.0013953517470529012,
        0.0019924052951850561,
        -0.00068585669495971163,
        -0.00011646685512928545,
        9.3588670320069591e-5,
        -1.3264202894521245e-5,
    ),
    11: (
        0.018694297761471084,
        0.14406702115062451,
        0.44989976435604533,
        0.68568677491620051,
        0.41196436894790746,
        -0.16227524502749036,
        -0.27423084681794696,
        0.066043588196683192,
        0.14981201246637850,
        -0.046479955116684187,
        -0.066438785695025205,
        0.031335090219046076,
        0.020840904360181063,
        -0.015364820906201599,
        -0.0033408588730144456,
        0.0049284176560590411,
        -0.00030859285881514317,
        -0.00089302325066626461,
        0.00024915252355282350,
        5.4439074699368472e-5,
        -3.4634984186984996e-5,
        4.4942742772365101e-6,
    ),
    12: (
        0.013112257957229518,
        0.10956627282118515,
        0.37735513521421266,
        0.65719872257930709,
        0.51588647842781561,
        -0.044763885653774627,
        -0.31617845375278554,
        -0.023779257256069728,
        0.18247860592757968,
        0.0053595696743521503,
        -0.096432120096507082,
        0.010849130255822184,
        0.041546277495084441,
        -0.012218649069748281,
        -0.012840825198300683,
        0.0067114990087955092,
        0.0022486072409952376,
        -0.0021795036186277605,
        6.5451282125095956e-6,
        0.00038865306282093144,
        -8.8504109208204324e-5,
        -2.4241545757030784e-5,
        1.2776952219379767e-5,
        -1.5290717580685109e-6,
    ),
    13: (
        0.0092021335389623680,
        0.082861243872902780,
        0.31199632216043806,
        0.61105585115878765,
        0.58888957043121891,
        0.086985726179647237,
        -0.31497290771138863,
        -0.12457673075081526,
        0.17947607942933984,
        0.072948933656777164,
        -0.10580761818793433,
        -0.026488406475343695,
        0.056139477100283429,
        0.0023799722540590788,
        -0.023831420710323649,
        0.0039239414487974162,
        0.0072555894016175662,
        -0.0027619112346568622,
        -0.0013156739118922989,
        0.00093232613086726339,
        4.9251525126289462e-5,
        -0.00016512898855650549,
        3.0678537579325493e-5,
        1.0441930571408137e-5,
        -4.7004164793608683e-6,
        5.2200350984548647e-7,
    ),
    14: (
        0.0064611534600879478,
        0.062364758849398898,
        0.25485026779262135,
        0.55430561794089384,
        0.63118784910485678,
        0.21867068775890652,
        -0.27168855227874804,
        -0.21803352999327604,
        0.13839521386480659,
        0.13998901658446070,
        -0.086748411568169689,
        -0.071548955504046131,
        0.055237126259216044,
        0.026981408307912917,
        -0.030185351540390635,
        -0.0056150495303569591,
        0.012789493266333409,
        -0.00074621898926838494,
        -0.0038496388680221874,
        0.0010616910856067618,
        0.00070802115423552786,
        -0.00038683194731295448,
        -4.1777245770372597e-5,
        6.8755042526975096e-5,
        -1.0337209184570774e-5,
        -4.3897049017813941e-6,
        1.7249946753678128e-6,
        -1.7871399683113591e-7,
    ),
    15: (
        0.0045385373615788989,
        0.046743394892766272,
        0.20602386398699573,
        0.49263177170813962,
        0.64581314035742436,
        0.33900253545473153,
        -0.19320413960914543,
        -0.28888259656696565,
        0.065282952848772817,
        0.19014671400712298,
        -0.039666176555790944,
        -0.11112093603723169,
        0.033877143923507686,
        0.054780550584507613,
        -0.025767007328439963,
        -0.020810050169693082,
        0.015083918027835902,
        0.0051010003604075432,
        -0.0064877345603157450,
        -0.00024175649076162428,
        0.0019433239803822115,
        -0.00037348235413761699,
        -0.00035956524436246881,
        0.00015589648992059975,
        2.5792699155318937e-5,
        -2.8133296266047814e-5,
        3.3629871817375798e-6,
        1.8112704079405771e-6,
        -6.3168823258816644e-7,
        6.1333599133057520e-8,
    ),
    16: (
        0.0031892209253477380,
        0.034907714323673346,
        0.16506428348885312,
        0.43031272284600381,
        0.63735633208378890,
        0.44029025688635690,
        -0.089751089402489643,
        -0.32706331052791770,
        -0.027918208133028277,
        0.21119069394710429,
        0.027340263752716041,
        -0.13238830556381039,
        -0.0062397227524748718,
        0.075924236044276316,
        -0.0075889743688577376,
        -0.036888397691730142,
        0.010297659640955969,
        0.013993768859828731,
        -0.0069900145634139167,
        -0.0036442796214983899,
        0.0031280233812062688,
        0.00040789698084971284,
        -0.00094102174935956759,
        0.00011424152003872239,
        0.00017478724522533818,
        -6.1035966214109358e-5,
        -1.3945668988208893e-5,
        1.1336608661276259e-5,
        -1.0435713423116065e-6,
        -7.3636567854512055e-7,
        2.3087840868575459e-7,
        -2.1093396301007431e-8,
    ),
    17: (
        0.0022418070010373129,
        0.025985393703606043,
        0.13121490330782441,
        0.37035072415264115,
        0.61099661568462282,
        0.51831576405693784,
        0.027314970403293635,
        -0.32832074836396174,
        -0.12659975221588270,
        0.19731058956501099,
        0.10113548917747027,
        -0.12681569177828631,
        -0.057091419631676927,
        0.081105986654160885,
        0.022312336178103796,
        -0.046922438389269737,
        -0.0032709555358192938,
        0.022733676583946270,
        -0.0030429899813546371,
        -0.0086029215203228548,
        0.0029679966915260949,
        0.0023012052421535456,
        -0.0014368453048029761,
        -0.00032813251940983797,
        0.00043946542776864368,
        -2.5610109566548459e-5,
        -8.2048032024533918e-5,
        2.3186813798745951e-5,
        6.9906009850767513e-6,
        -4.5059424772229882e-6,
        3.0165496099945574e-7,
        2.9577009333168568e-7,
        -8.4239484460026802e-8,
        7.2674929685616081e-9,
    ),
    18: (
        0.0015763102184407604,
        0.019288531724146377,
        0.10358846582242360,
        0.31467894133703170,
        0.57182680776660722,
        0.57180165488865134,
        0.14722311196992814,
        -0.29365404073655874,
        -0.21648093400514297,
        0.14953397556537779,
        0.16708131276325740,
        -0.092331884150846281,
        -0.10675224665982849,
        0.064887216211905443,
        0.057051247738536884,
        -0.044526141902982325,
        -0.023733210395860001,
        0.026670705926470590,
        0.0062621679543057075,
        -0.013051480946612002,
        0.00011863003385811747,
        0.0049433436054667381,
        -0.0011187326669924971,
        -0.0013405962983361066,
        0.00062846568296514571,
        0.00021358156191034069,
        -0.00019864855231174795,
        -1.5359171235347247e-7,
        3.7412378807400382e-5,
        -8.5206025374466952e-6,
        -3.3326344788858219e-6,
        1.7687129836276155e-6,
        -7.6916326898851761e-8,
        -1.1760987670282317e-7,
        3.0688358630451748e-8,
        -2.5079344549485983e-9,
    ),
    19: (
        0.0011086697631817106,
        0.014281098450764397,
        0.081278113265459551,
        0.26438843174089678,
        0.52443637746465492,
        0.60170454912753789,
        0.26089495265103883,
        -0.22809139421548265,
        -0.28583863175582624,
        0.074652269708103266,
        0.21234974330627849,
        -0.033518541902302879,
        -0.14278569503873657,
        0.027584350625628669,
        0.086906755555812232,
        -0.026501236250123041,
        -0.045674226277230908,
        0.021623767409585047,
        0.019375549889176128,
        -0.013988388678535142,
        -0.0058669222810121747,
        0.0070407473671052432,
        0.00076895435925754836,
        -0.0026875518007015820,
        0.00034180865345859578,
        0.00073580252050543521,
        -0.00026067613567862801,
        -0.00012460079173415878,
        8.7112704672199230e-5,
        5.1059504870738861e-6,
        -1.6640176297154945e-5,
        3.0109643162965263e-6,
        1.5319314766911931e-6,
        -6.8627556577691427e-7,
        1.4470882987978445e-8,
        4.6369377757826042e-8,
        -1.1164020670358258e-8,
        8.6668488389976194e-10,
    ),
    20: (
        0.00077995361366684632,
        0.010549394624950398,
        0.063423780459081515,
        0.21994211355139705,
        0.47269618531090170,
        0.61049323893859382,
        0.36150229873933106,
        -0.13921208801148387,
        -0.32678680043403497,
        -0.016727088309077008,
        0.22829105081991632,
        0.039850246457771202,
        -0.15545875070726796,
        -0.024716827338613584,
        0.10229171917444256,
        0.0056322468573074355,
        -0.061722899624680460,
        0.0058746818118118265,
        0.032294299530769582,
        -0.0087893249239015613,
        -0.013810526137151920,
        0.0067216273022594568,
        0.0044205423870457910,
        -0.0035814942596096228,
        -0.00083156217282255692,
        0.0013925596193231363,
        -5.3497598439976951e-5,
        -0.00038510474869921761,
        0.00010153288973670291,
        6.7742808283777296e-5,
        -3.7105861833947129e-5,
        -4.3761438621839968e-6,
        7.2412482876736201e-6,
        -1.0119940100188862e-6,
        -6.8470795970005569e-7,
        2.6339242262700011e-7,
        2.0143220235505127e-10,
        -1.8148432482996960e-8,
        4.0561270555518328e-9,
        -2.9988364896193196e-10,
    ),
}
